//! Local HTTP and WebSocket service for monitoring and controlling a
//! simulated garden.
//!
//! | Method | Path | Success |
//! |---|---|---|
//! | GET | `/api/state` | 200 `StateView` |
//! | GET | `/api/health` | 200 `HealthAssessment`, 503 before the first reading |
//! | POST | `/api/water` `{"action":"start"\|"stop"}` | 202 outcome, 409 rejection |
//! | POST | `/api/security` `{"armed":bool}` | 200 `SecurityState` |
//! | GET | `/api/schedules` | 200 slot list |
//! | POST | `/api/schedules` `{"time":"HH:MM"}` | 201 slot |
//! | DELETE | `/api/schedules/{id}` | 204, 404 if unknown |
//! | GET | `/api/events?since=N` | 200 events with `seq > N` |
//! | GET | `/api/stream[?since=N]` | WebSocket of [`StreamMessage`] |
//!
//! Errors are [`ApiError`] documents.

mod engine;
mod error;
mod routes;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

use tokio::net::TcpListener;
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use verdant_core::controller::StateView;
use verdant_core::sim::Scenario;
use verdant_core::ThresholdProfile;

pub use engine::StreamMessage;
pub use error::{ApiError, ServiceError};
pub use store::PersistedSchedule;

use engine::{Engine, Request};
use routes::AppState;

/// Environment variable naming the persistence directory.
pub const DATA_DIR_ENV: &str = "VERDANT_DATA_DIR";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub scenario: Scenario,
    pub profile: ThresholdProfile,
    pub addr: SocketAddr,
    /// Simulated seconds per wall-clock second. `None` advances only on
    /// [`ServiceHandle::step`].
    pub speed: Option<f64>,
    /// `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(scenario: Scenario, profile: ThresholdProfile) -> Self {
        ServiceConfig {
            scenario,
            profile,
            addr: SocketAddr::from(([127, 0, 0, 1], 0)),
            speed: Some(1.0),
            data_dir: None,
        }
    }
}

pub struct ServiceHandle {
    addr: SocketAddr,
    requests: mpsc::Sender<Request>,
    shutdown: Option<oneshot::Sender<()>>,
    server: JoinHandle<std::io::Result<()>>,
    engine: JoinHandle<()>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Advances the simulation by `ticks` and returns the resulting state.
    pub async fn step(&self, ticks: u64) -> Result<StateView, ServiceError> {
        let (tx, rx) = oneshot::channel();
        self.requests
            .send(Request::Step(ticks, tx))
            .await
            .map_err(|_| ServiceError::EngineStopped)?;
        rx.await.map_err(|_| ServiceError::EngineStopped)
    }

    /// Stops accepting connections and waits for the engine to finish.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.server).await;
        drop(self.requests);
        let _ = (&mut self.engine).await;
    }

    /// Resolves when the server stops on its own.
    pub async fn wait(mut self) -> std::io::Result<()> {
        let result = (&mut self.server).await.unwrap_or(Ok(()));
        drop(self.requests);
        let _ = (&mut self.engine).await;
        result
    }
}

/// Binds, restores persisted state and starts serving.
pub async fn start(config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let pacing = match config.speed {
        Some(s) if s.is_finite() && s > 0.0 => Some(engine::pacing(config.scenario.tick_ms, s)),
        Some(s) => return Err(ServiceError::InvalidSpeed(s)),
        None => None,
    };
    let store = config.data_dir.as_deref().map(store::Store::open).transpose()?;
    let (engine, shared) = Engine::new(&config.scenario, config.profile, store)?;

    let listener = TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.addr,
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| ServiceError::Bind {
        addr: config.addr,
        source,
    })?;

    let (requests, rx) = mpsc::channel(1024);
    let engine = tokio::spawn(engine.run(rx, pacing));
    let (closing_tx, closing) = watch::channel(false);
    let app = routes::router(AppState {
        requests: requests.clone(),
        shared,
        closing,
    });
    let (shutdown, shutdown_rx) = oneshot::channel::<()>();
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = shutdown_rx.await;
                closing_tx.send_replace(true);
            })
            .await
    });
    Ok(ServiceHandle {
        addr,
        requests,
        shutdown: Some(shutdown),
        server,
        engine,
    })
}
