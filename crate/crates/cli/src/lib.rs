//! Command implementations behind the `crashrecon` binary.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use crashrecon::camera::CameraIntrinsics;
use crashrecon::editor::{EditorService, Rejection};
use crashrecon::metrics::{absolutize_ground_truth, evaluate, read_tracks_csv, MetricsReport};
use crashrecon::pipeline::{read_config, run_many, PipelineConfig, PipelineOutput};
use crashrecon::synth::{generate_synthetic, SceneScript, SyntheticScene};
use crashrecon::trajectory::odometry::read_odometry_csv;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] crashrecon::Error),

    #[error("{addr} is already in use")]
    PortBusy { addr: SocketAddr },

    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("server failed: {0}")]
    Serve(#[source] std::io::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{failed} of {total} scenes failed")]
    ScenesFailed { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Scenario paths for `extract`: a single input writes to `output` itself,
/// several inputs write `<output>/<input name>.json` each.
pub fn extract_jobs(inputs: &[PathBuf], output: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    match inputs {
        [] => Err(CliError::Usage("no input directories given".into())),
        [one] => Ok(vec![(one.clone(), output.to_path_buf())]),
        many => {
            let mut seen = BTreeMap::new();
            many.iter()
                .map(|input| {
                    let name = input
                        .file_name()
                        .ok_or_else(|| CliError::Usage(format!("{} has no directory name", input.display())))?;
                    let target = output.join(format!("{}.json", name.to_string_lossy()));
                    if let Some(prev) = seen.insert(target.clone(), input.clone()) {
                        return Err(CliError::Usage(format!(
                            "{} and {} would both write {}",
                            prev.display(),
                            input.display(),
                            target.display()
                        )));
                    }
                    Ok((input.clone(), target))
                })
                .collect()
        }
    }
}

/// Runs the pipeline on every input. Each scene uses `config` when given,
/// otherwise its own `config.toml` when present, otherwise the defaults.
/// Scenes sharing a configuration run on that configuration's worker pool.
pub fn extract(inputs: &[PathBuf], output: &Path, config: Option<&Path>) -> Result<Vec<PipelineOutput>> {
    let jobs = extract_jobs(inputs, output)?;
    let shared = config.map(read_config).transpose()?;
    let mut configs = Vec::with_capacity(jobs.len());
    for (input, _) in &jobs {
        let own = input.join("config.toml");
        configs.push(match &shared {
            Some(c) => c.clone(),
            None if own.is_file() => read_config(&own)?,
            None => PipelineConfig::default(),
        });
    }

    let mut results: Vec<Option<crashrecon::Result<PipelineOutput>>> = jobs.iter().map(|_| None).collect();
    let mut pending: Vec<usize> = (0..jobs.len()).collect();
    while let Some(&first) = pending.first() {
        let (group, rest): (Vec<usize>, Vec<usize>) = pending.iter().partition(|&&i| configs[i] == configs[first]);
        let batch: Vec<(PathBuf, PathBuf)> = group.iter().map(|&i| jobs[i].clone()).collect();
        for (i, r) in group.iter().zip(run_many(&batch, &configs[first])) {
            results[*i] = Some(r);
        }
        pending = rest;
    }

    let mut outputs = Vec::new();
    let mut failed = 0;
    for ((input, target), r) in jobs.iter().zip(results) {
        match r.expect("every scene ran") {
            Ok(out) => {
                for w in &out.diagnostics.warnings {
                    log::warn!("{}: {w}", input.display());
                }
                log::info!(
                    "{} -> {} ({} vehicles, {} frames)",
                    input.display(),
                    target.display(),
                    out.scenario.vehicles.len(),
                    out.diagnostics.frames
                );
                outputs.push(out);
            }
            Err(e) => {
                log::error!("{}: {e}", input.display());
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(CliError::ScenesFailed { failed, total: jobs.len() });
    }
    Ok(outputs)
}

/// Renders the scene script into an input directory.
pub fn synth(script: &Path, output: &Path, focal: f64, width: usize, height: usize) -> Result<SyntheticScene> {
    let text = std::fs::read_to_string(script).map_err(io_error(script))?;
    let script = SceneScript::from_toml(&text).map_err(|e| match e {
        crashrecon::Error::Script(m) => crashrecon::Error::Parse { path: script.to_path_buf(), message: m },
        other => other,
    })?;
    let intrinsics = CameraIntrinsics::centered(focal, width, height)?;
    let scene = generate_synthetic(&script, &intrinsics, output)?;
    log::info!(
        "{}: {} frames, {} detections, {} ground-truth rows",
        output.display(),
        script.frames,
        scene.detections.len(),
        scene.ground_truth.len()
    );
    Ok(scene)
}

/// Options of the `eval` command.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub threshold: f64,
    /// Odometry that turns ego-relative ground truth into world positions.
    pub odometry: Option<PathBuf>,
    pub name: String,
    pub json: bool,
}

/// Evaluates `est` against `gt` and returns the report with its rendering.
pub fn eval(gt: &Path, est: &Path, opts: &EvalOptions) -> Result<(MetricsReport, String)> {
    let mut truth = read_tracks_csv(gt)?;
    if let Some(odo) = &opts.odometry {
        truth = absolutize_ground_truth(&truth, &read_odometry_csv(odo)?)?;
    }
    let estimate = read_tracks_csv(est)?;
    let report = evaluate(&truth, &estimate, opts.threshold)?;
    let text = if opts.json { report.to_json() } else { report.to_table(&opts.name) };
    Ok((report, text))
}

struct AppState {
    editor: Mutex<EditorService>,
}

type Shared = Arc<AppState>;

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn rejection(status: StatusCode, r: &Rejection) -> Response {
    json_response(status, serde_json::to_string_pretty(r).expect("rejection serializes"))
}

async fn get_scenario(State(state): State<Shared>) -> Response {
    let editor = state.editor.lock().expect("editor lock");
    json_response(StatusCode::OK, editor.get().to_string())
}

async fn put_scenario(State(state): State<Shared>, body: String) -> Response {
    let mut editor = state.editor.lock().expect("editor lock");
    match editor.put(&body) {
        Ok(text) => {
            log::info!("scenario replaced ({} bytes)", text.len());
            json_response(StatusCode::OK, text.to_string())
        }
        Err(r) if r.error.starts_with("could not store") => {
            log::error!("{}: {:?}", r.error, r.violations);
            rejection(StatusCode::INTERNAL_SERVER_ERROR, &r)
        }
        Err(r) => {
            log::info!("scenario rejected: {} violation(s)", r.violations.len());
            rejection(StatusCode::UNPROCESSABLE_ENTITY, &r)
        }
    }
}

async fn post_check(State(state): State<Shared>, body: String) -> Response {
    let editor = state.editor.lock().expect("editor lock");
    match editor.check(&body) {
        Ok(conflicts) => json_response(
            StatusCode::OK,
            serde_json::to_string_pretty(&serde_json::json!({ "conflicts": conflicts })).expect("conflicts serialize"),
        ),
        Err(r) => rejection(StatusCode::UNPROCESSABLE_ENTITY, &r),
    }
}

async fn no_assets() -> &'static str {
    "crashrecon scenario service: GET /scenario, PUT /scenario, POST /check\n"
}

/// Routes of the editor service. Requests for the scenario are serialized
/// through one lock, so there is a single writer at a time.
pub fn router(editor: EditorService, assets: Option<&Path>) -> Router {
    let state = Arc::new(AppState { editor: Mutex::new(editor) });
    let api = Router::new()
        .route("/scenario", get(get_scenario).put(put_scenario))
        .route("/check", post(post_check))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.route("/", get(no_assets)),
    }
}

/// Binds the listening socket, reporting a busy port distinctly.
pub async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await.map_err(|source| {
        if source.kind() == std::io::ErrorKind::AddrInUse {
            CliError::PortBusy { addr }
        } else {
            CliError::Bind { addr, source }
        }
    })
}

/// Options of the `serve` command.
#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    pub min_gap: f64,
    pub assets: Option<PathBuf>,
}

/// Serves `scenario` until the process is stopped.
pub async fn serve(scenario: &Path, opts: &ServeOptions) -> Result<()> {
    let editor = EditorService::open(scenario, opts.min_gap)?;
    if let Some(dir) = &opts.assets {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
        }
    }
    let listener = bind(opts.addr).await?;
    let local = listener.local_addr().map_err(CliError::Serve)?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(editor, opts.assets.as_deref())).await.map_err(CliError::Serve)
}
