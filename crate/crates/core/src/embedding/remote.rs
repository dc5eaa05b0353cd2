//! HTTP embedding provider: `POST {"texts": [...]}` returns `{"vectors": [[...]]}`.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{EmbedError, Embedder, EmbeddingVector};

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteEmbedderConfig {
    pub url: String,
    pub dim: usize,
    /// Model label folded into the fingerprint.
    pub model: String,
    pub timeout: Duration,
}

impl RemoteEmbedderConfig {
    /// Reads `MEALPRINT_EMBEDDING_URL`, `MEALPRINT_EMBEDDING_DIM`,
    /// `MEALPRINT_EMBEDDING_MODEL` and `MEALPRINT_EMBEDDING_TIMEOUT_SECS`.
    pub fn from_env() -> Result<Self, EmbedError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        let url = var("MEALPRINT_EMBEDDING_URL")
            .ok_or_else(|| EmbedError::Config("MEALPRINT_EMBEDDING_URL is not set".into()))?;
        let parse = |name: &str, default: u64| -> Result<u64, EmbedError> {
            var(name).map_or(Ok(default), |v| v.parse().map_err(|_| EmbedError::Config(format!("bad {name} `{v}`"))))
        };
        Ok(RemoteEmbedderConfig {
            url,
            dim: parse("MEALPRINT_EMBEDDING_DIM", 384)? as usize,
            model: var("MEALPRINT_EMBEDDING_MODEL").unwrap_or_else(|| "remote".into()),
            timeout: Duration::from_secs(parse("MEALPRINT_EMBEDDING_TIMEOUT_SECS", 30)?),
        })
    }
}

pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct Reply {
    vectors: Vec<Vec<f32>>,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, EmbedError> {
        if config.dim == 0 {
            return Err(EmbedError::Config("dimension must be positive".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteEmbedder { config, agent })
    }
}

impl Embedder for RemoteEmbedder {
    fn fingerprint(&self) -> String {
        format!("remote-{}-{}", self.config.model, self.config.dim)
    }

    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let mut response = self
            .agent
            .post(&self.config.url)
            .send_json(json!({ "texts": texts }))
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| EmbedError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(EmbedError::Http { status, body });
        }
        let reply: Reply = serde_json::from_str(&body).map_err(|e| EmbedError::BadReply(e.to_string()))?;
        if reply.vectors.len() != texts.len() {
            return Err(EmbedError::BadReply(format!("{} vectors for {} texts", reply.vectors.len(), texts.len())));
        }
        reply
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.config.dim {
                    Err(EmbedError::BadReply(format!("vector of dim {} (expected {})", v.len(), self.config.dim)))
                } else {
                    Ok(EmbeddingVector::normalized(v))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn serve_once(status: u16, body: String) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(stream, "HTTP/1.1 {status} X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len())
                .unwrap();
        });
        format!("http://{addr}/embed")
    }

    fn config(url: String) -> RemoteEmbedderConfig {
        RemoteEmbedderConfig { url, dim: 2, model: "m".into(), timeout: Duration::from_secs(5) }
    }

    #[test]
    fn vectors_are_normalized() {
        let url = serve_once(200, r#"{"vectors":[[3,4],[0,2]]}"#.into());
        let got = RemoteEmbedder::new(config(url)).unwrap().embed_batch(&["a", "b"]).unwrap();
        assert!((got[0].values()[1] - 0.8).abs() < 1e-6);
        assert_eq!(got[1].values(), &[0.0, 1.0]);
    }

    #[test]
    fn http_error_typed() {
        let url = serve_once(503, "down".into());
        let err = RemoteEmbedder::new(config(url)).unwrap().embed_batch(&["a"]).unwrap_err();
        assert!(matches!(err, EmbedError::Http { status: 503, .. }));
    }

    #[test]
    fn wrong_dim_rejected() {
        let url = serve_once(200, r#"{"vectors":[[1,2,3]]}"#.into());
        let err = RemoteEmbedder::new(config(url)).unwrap().embed_batch(&["a"]).unwrap_err();
        assert!(matches!(err, EmbedError::BadReply(_)));
    }
}
