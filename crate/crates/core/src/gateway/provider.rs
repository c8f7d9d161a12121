//! Chat-completions style HTTP client with retries and a concurrency limit.

use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{build_solve_prompt, GatewayError, ProblemInput, PromptBundle};

/// Environment variable read for the bearer token when the config names none.
pub const DEFAULT_SECRET_ENV: &str = "SOLIDGEO_API_KEY";

fn default_secret_env() -> String {
    DEFAULT_SECRET_ENV.to_string()
}
fn default_attempts() -> usize {
    3
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_concurrency() -> usize {
    4
}

/// Provider settings, usually read from a TOML file:
///
/// ```toml
/// endpoint = "https://api.example.com/v1/chat/completions"
/// model = "some-vision-model"
/// api_key_env = "SOLIDGEO_API_KEY"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_secret_env")]
    pub api_key_env: String,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl ProviderConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, GatewayError> {
        let c: Self = toml::from_str(s).map_err(|e| GatewayError::Config(e.to_string()))?;
        if c.max_attempts == 0 || c.max_concurrency == 0 {
            return Err(GatewayError::Config("max_attempts and max_concurrency must be positive".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// Counting semaphore guarding in-flight requests.
#[derive(Debug)]
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// A configured endpoint. Cheap to clone; clones share the concurrency limit.
#[derive(Clone, Debug)]
pub struct Provider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
    permits: Arc<Permits>,
}

fn image_part(image: &str) -> Result<Value, GatewayError> {
    let url = if image.starts_with("http://") || image.starts_with("https://") || image.starts_with("data:") {
        image.to_string()
    } else {
        let bytes = std::fs::read(image).map_err(|source| GatewayError::Image {
            path: image.to_string(),
            source,
        })?;
        let ext = Path::new(image)
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("png")
            .to_ascii_lowercase();
        let mime = match ext.as_str() {
            "jpg" | "jpeg" => "image/jpeg",
            "gif" => "image/gif",
            "webp" => "image/webp",
            _ => "image/png",
        };
        format!("data:{mime};base64,{}", base64::engine::general_purpose::STANDARD.encode(bytes))
    };
    Ok(json!({"type": "image_url", "image_url": {"url": url}}))
}

fn user_content(text: String, problem: &ProblemInput) -> Result<Value, GatewayError> {
    let mut parts = vec![json!({"type": "text", "text": text})];
    if let Some(img) = &problem.image {
        parts.push(image_part(img)?);
    }
    Ok(Value::Array(parts))
}

impl Provider {
    pub fn new(config: ProviderConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        let permits = Arc::new(Permits {
            free: Mutex::new(config.max_concurrency),
            cv: Condvar::new(),
        });
        Ok(Self {
            config,
            client,
            permits,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// Send a parsing prompt; returns the raw response body.
    pub fn request_parse(&self, bundle: &PromptBundle) -> Result<String, GatewayError> {
        let body = self.body(bundle.system_prompt(), user_content(bundle.user_prompt(), &bundle.problem)?);
        self.post(&body)
    }

    /// Send a direct-solve prompt; returns the raw response body.
    pub fn request_solve(&self, problem: &ProblemInput) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": user_content(build_solve_prompt(problem), problem)?}],
        });
        self.post(&body)
    }

    fn body(&self, system: String, user: Value) -> Value {
        let mut b = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        if let Some(t) = self.config.temperature {
            b["temperature"] = json!(t);
        }
        b
    }

    fn post(&self, body: &Value) -> Result<String, GatewayError> {
        let secret = std::env::var(&self.config.api_key_env)
            .map_err(|_| GatewayError::MissingSecret(self.config.api_key_env.clone()))?;
        let _permit = self.permits.acquire();
        let attempts = self.config.max_attempts;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            let resp = self
                .client
                .post(&self.config.endpoint)
                .bearer_auth(&secret)
                .json(body)
                .send();
            let resp = match resp {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = resp.text().unwrap_or_default();
            match status {
                200..=299 => return Ok(text),
                401 | 403 => return Err(GatewayError::AuthFailure(status)),
                429 | 500..=599 => last = format!("HTTP {status}: {text}"),
                _ => return Err(GatewayError::Provider { status, body: text }),
            }
        }
        Err(GatewayError::Transport {
            attempts,
            message: last,
        })
    }
}

/// The assistant message of a chat-completions response, or the body
/// itself when it has no such structure.
pub fn completion_text(body: &str) -> String {
    serde_json::from_str::<Value>(body)
        .ok()
        .and_then(|v| v["choices"][0]["message"]["content"].as_str().map(str::to_string))
        .unwrap_or_else(|| body.to_string())
}
