use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::Json;
use sociface_core::harness::{run_named, ExperimentConfig, ExperimentReport, EXPERIMENT_NAMES};

use crate::api::ExperimentRun;
use crate::error::{parse_required, ApiError};
use crate::state::AppState;

fn known(name: &str) -> Result<(), ApiError> {
    if EXPERIMENT_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(ApiError::not_found(format!(
            "unknown experiment '{name}' (expected one of {EXPERIMENT_NAMES:?})"
        )))
    }
}

/// Runs against the service corpus and writes `<name>.csv` and
/// `<name>.json` under the report directory. An optional body overrides the
/// service's experiment configuration.
pub(crate) async fn run(
    State(app): State<AppState>,
    Path(name): Path<String>,
    body: Bytes,
) -> Result<Json<ExperimentRun>, ApiError> {
    known(&name)?;
    let cfg: ExperimentConfig = if body.iter().all(u8::is_ascii_whitespace) {
        app.config().experiments.clone()
    } else {
        parse_required(&body)?
    };
    let job = app.clone();
    let report = tokio::task::spawn_blocking(move || run_named(&name, job.corpus(), &cfg))
        .await
        .map_err(|e| ApiError::internal(format!("experiment task failed: {e}")))??;
    let dir = &app.config().report_dir;
    let csv = report.write_to(dir)?;
    Ok(Json(ExperimentRun {
        json: dir.join(format!("{}.json", report.experiment)),
        experiment: report.experiment,
        csv,
        rows: report.rows.len(),
    }))
}

/// Returns the last report written for `name`.
pub(crate) async fn get(
    State(app): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<ExperimentReport>, ApiError> {
    known(&name)?;
    let path = app.config().report_dir.join(format!("{name}.json"));
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ApiError::not_found(format!(
                "experiment '{name}' has not been run"
            )))
        }
        Err(e) => return Err(ApiError::internal(e.to_string())),
    };
    serde_json::from_str(&text)
        .map(Json)
        .map_err(|e| ApiError::internal(format!("report {}: {e}", path.display())))
}
