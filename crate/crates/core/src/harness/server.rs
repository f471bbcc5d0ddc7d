//! WebSocket front end for [`Connection`]: one session per socket, frames
//! processed strictly in arrival order.

use std::net::SocketAddr;
use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;

use crate::error::{Error, Result};
use crate::gaze::{RegionFinder, SessionConfig};

use super::protocol::{codes, Connection, Envelope, MonotonicClock, ServerMessage};

#[derive(Clone, Debug, Default)]
pub struct ServeConfig {
    pub session: SessionConfig,
    pub finder: RegionFinder,
}

/// Binds and serves until the process is stopped. Bind failures surface
/// before any connection is accepted.
pub fn serve(addr: SocketAddr, config: ServeConfig) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = TcpListener::bind(addr).await?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        serve_listener(listener, Arc::new(config)).await
    })
}

pub async fn serve_listener(listener: TcpListener, config: Arc<ServeConfig>) -> Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let config = Arc::clone(&config);
        tokio::spawn(async move {
            if let Err(e) = handle_connection(stream, config).await {
                tracing::warn!(%peer, error = %e, "connection ended with error");
            }
        });
    }
}

fn ws_err(e: tokio_tungstenite::tungstenite::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

async fn handle_connection(stream: TcpStream, config: Arc<ServeConfig>) -> Result<()> {
    let ws = tokio_tungstenite::accept_async(stream).await.map_err(ws_err)?;
    let (mut tx, mut rx) = ws.split();
    let mut conn = Some(Connection::new(config.session, config.finder.clone(), MonotonicClock::default()));
    while let Some(msg) = rx.next().await {
        let reply = match msg.map_err(ws_err)? {
            Message::Text(text) => {
                let mut c = conn.take().expect("connection state is always returned");
                let text = text.to_string();
                let (c, reply) = tokio::task::spawn_blocking(move || {
                    let r = c.handle_text(&text);
                    (c, r)
                })
                .await
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
                conn = Some(c);
                reply
            }
            Message::Binary(_) => serde_json::to_string(&Envelope::new(ServerMessage::Error {
                index: None,
                code: codes::BAD_MESSAGE.into(),
                message: "binary messages are not part of the protocol".into(),
            }))?,
            Message::Close(_) => break,
            _ => continue,
        };
        tx.send(Message::text(reply)).await.map_err(ws_err)?;
    }
    Ok(())
}
