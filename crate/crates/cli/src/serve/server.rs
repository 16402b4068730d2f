//! WebSocket transport. Each connection on `/ws` gets its own session;
//! client messages and step ticks are handled on one task, so commands
//! always land between steps.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use swarmshape::engine::Scenario;
use tokio::net::TcpListener;
use tokio::time::{interval_at, Instant, Interval, MissedTickBehavior};

use super::protocol::{decode, encode, ServerMsg, Violation};
use super::session::Session;

/// Close code for protocol violations.
pub const CLOSE_POLICY: u16 = 1008;
/// Close code when the engine fails.
pub const CLOSE_INTERNAL: u16 = 1011;

pub fn router(scenario: Scenario) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(Arc::new(scenario))
}

pub async fn serve(listener: TcpListener, scenario: Scenario) -> anyhow::Result<()> {
    axum::serve(listener, router(scenario)).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(scenario): State<Arc<Scenario>>) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, scenario))
}

fn ticker(steps_per_second: f64) -> Interval {
    let period = Duration::from_secs_f64(1.0 / steps_per_second);
    let mut t = interval_at(Instant::now() + period, period);
    t.set_missed_tick_behavior(MissedTickBehavior::Delay);
    t
}

async fn send(socket: &mut WebSocket, msg: &ServerMsg) -> bool {
    socket.send(Message::Text(encode(msg))).await.is_ok()
}

async fn close(socket: &mut WebSocket, status: u16, v: Violation) {
    if send(socket, &v.closed()).await {
        let frame = CloseFrame { code: status, reason: v.code.into() };
        let _ = socket.send(Message::Close(Some(frame))).await;
    }
}

async fn run_session(mut socket: WebSocket, scenario: Arc<Scenario>) {
    let mut session = match Session::new(&scenario) {
        Ok(s) => s,
        Err(e) => return close(&mut socket, CLOSE_INTERNAL, Violation::new("engine_error", e.to_string())).await,
    };
    if !send(&mut socket, &session.snapshot()).await {
        return;
    }
    let mut clock = ticker(session.steps_per_second());
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Binary(_))) => {
                        let v = Violation::new("binary_frame", "frames must be JSON text");
                        return close(&mut socket, CLOSE_POLICY, v).await;
                    }
                    Some(Ok(_)) => continue,
                };
                let msg = match decode(&text) {
                    Ok(m) => m,
                    Err(v) => return close(&mut socket, CLOSE_POLICY, v).await,
                };
                let speed = session.steps_per_second();
                for out in session.handle(msg) {
                    if !send(&mut socket, &out).await {
                        return;
                    }
                }
                if session.steps_per_second() != speed {
                    clock = ticker(session.steps_per_second());
                }
            }
            _ = clock.tick(), if !session.paused() => {
                match session.tick() {
                    Ok(diff) => {
                        if !send(&mut socket, &diff).await {
                            return;
                        }
                    }
                    Err(e) => return close(&mut socket, CLOSE_INTERNAL, Violation::new("engine_error", e.to_string())).await,
                }
            }
        }
    }
}
