use std::env;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{elapsed_ms, Generator, GeneratorRequest, GeneratorResponse};
use crate::error::{Error, Result};
use crate::replay::Role;

pub const ENV_URL: &str = "GENERATOR_URL";
pub const ENV_KEY: &str = "GENERATOR_KEY";
pub const ENV_MODEL: &str = "GENERATOR_MODEL";
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    refusal: Option<String>,
}

/// Chat-completions client: POSTs `{model, messages, max_tokens}` with a
/// bearer token and reads `choices[0].message.content`.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    url: String,
    key: Option<String>,
    model: String,
    agent: Agent,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(DEFAULT_TIMEOUT))
            .build()
            .into();
        Self {
            url: url.into(),
            key,
            model: model.into(),
            agent,
        }
    }

    /// Reads the endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self> {
        let url = env::var(ENV_URL)
            .map_err(|_| Error::InvalidArgument(format!("{ENV_URL} is not set")))?;
        let model = env::var(ENV_MODEL)
            .map_err(|_| Error::InvalidArgument(format!("{ENV_MODEL} is not set")))?;
        Ok(Self::new(url, env::var(ENV_KEY).ok(), model))
    }

    /// Serialized request body, as sent on the wire.
    pub fn request_body(&self, req: &GeneratorRequest) -> serde_json::Value {
        let mut messages = vec![Message {
            role: "system",
            content: &req.system_prompt,
        }];
        messages.extend(req.history.iter().map(|(role, text)| Message {
            role: match role {
                Role::User => "user",
                Role::Bot => "assistant",
            },
            content: text,
        }));
        serde_json::to_value(ChatRequest {
            model: &self.model,
            messages,
            max_tokens: req.max_reply_tokens,
        })
        .expect("request body serializes")
    }
}

fn failure(reason: impl ToString) -> Error {
    Error::Generator {
        attempts: 1,
        reason: reason.to_string(),
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse> {
        let start = Instant::now();
        let mut call = self.agent.post(&self.url);
        if let Some(key) = &self.key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call.send_json(self.request_body(req)).map_err(failure)?;
        let body: ChatResponse = resp.body_mut().read_json().map_err(failure)?;
        let choice = body
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| failure("response has no choices"))?;
        let refused = choice.message.refusal.is_some()
            || choice.finish_reason.as_deref() == Some("content_filter");
        Ok(GeneratorResponse {
            text: choice.message.content.unwrap_or_default(),
            latency_ms: elapsed_ms(start),
            provider_tag: self.model.clone(),
            refused,
        })
    }

    fn provider_tag(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let g = HttpGenerator::new("http://localhost:1/v1/chat/completions", None, "m");
        let req = GeneratorRequest {
            system_prompt: "sys".into(),
            history: vec![
                (Role::User, "hi".into()),
                (Role::Bot, "hello".into()),
                (Role::User, "bye".into()),
            ],
            max_reply_tokens: 32,
        };
        let expected = serde_json::json!({
            "model": "m",
            "messages": [
                {"role": "system", "content": "sys"},
                {"role": "user", "content": "hi"},
                {"role": "assistant", "content": "hello"},
                {"role": "user", "content": "bye"}
            ],
            "max_tokens": 32
        });
        assert_eq!(g.request_body(&req), expected);
    }
}
