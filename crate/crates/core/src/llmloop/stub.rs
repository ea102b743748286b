use std::time::Instant;

use super::{elapsed_ms, Generator, GeneratorRequest, GeneratorResponse};
use crate::error::Result;
use crate::promptgen::{Direction, FragmentId, Translator};

/// Reply phrase written for each active fragment by the styled stub.
pub const STYLE_MARKERS: [(usize, Direction, &str); 16] = [
    (0, Direction::High, "lol yeah ok gonna do that, u know"),
    (0, Direction::Low, "I would be pleased to discuss this matter further."),
    (1, Direction::High, "That sounds wonderful, I love it!"),
    (1, Direction::Low, "That is a sad and difficult situation."),
    (
        2,
        Direction::High,
        "When you think about everything that happened over the past few weeks it makes a lot of sense that you would want to take some time to rest and reflect on it all.",
    ),
    (2, Direction::Low, "Got it. Sure."),
    (3, Direction::High, "It is a good day to go out and have fun."),
    (3, Direction::Low, "Contemplating alternative methodologies necessitates considerable deliberation."),
    (4, Direction::High, "We should talk with your friends and family about it together."),
    (4, Direction::Low, "The schedule depends on the weather forecast."),
    (5, Direction::High, "I think that because of this you probably know the reason."),
    (5, Direction::Low, "Here it is."),
    (6, Direction::High, "I feel so happy and excited, and a little nervous too."),
    (6, Direction::Low, "The train leaves at noon."),
    (7, Direction::High, "It is what it is, and that is all there is to it."),
    (7, Direction::Low, "Blue sky, warm sun, fresh bread."),
];

/// Reply of the styled stub when no fragment is active.
pub const NEUTRAL_REPLY: &str = "Thanks for telling me about that.";

#[derive(Debug, Clone, PartialEq)]
pub enum StubMode {
    /// Repeats the latest user message.
    Echo,
    /// Always the same sentence.
    Fixed(String),
    /// One marker phrase per fragment found in the system prompt.
    Styled(Vec<(String, String)>),
}

/// Deterministic local generator.
#[derive(Debug, Clone)]
pub struct StubGenerator {
    mode: StubMode,
    tag: String,
}

impl StubGenerator {
    pub fn echo() -> Self {
        Self {
            mode: StubMode::Echo,
            tag: "stub-echo".into(),
        }
    }

    pub fn fixed(sentence: impl Into<String>) -> Self {
        Self {
            mode: StubMode::Fixed(sentence.into()),
            tag: "stub-fixed".into(),
        }
    }

    /// Recognises fragments by their text in `translator`'s table.
    pub fn styled(translator: &Translator) -> Self {
        let pairs = STYLE_MARKERS
            .iter()
            .filter_map(|&(dimension, direction, marker)| {
                let text = translator.fragment_text(FragmentId {
                    dimension,
                    direction,
                })?;
                Some((text.to_string(), marker.to_string()))
            })
            .collect();
        Self {
            mode: StubMode::Styled(pairs),
            tag: "stub-styled".into(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn mode(&self) -> &StubMode {
        &self.mode
    }

    fn reply(&self, req: &GeneratorRequest) -> String {
        match &self.mode {
            StubMode::Echo => req.last_user_text().unwrap_or_default().to_string(),
            StubMode::Fixed(s) => s.clone(),
            StubMode::Styled(pairs) => {
                let parts: Vec<&str> = pairs
                    .iter()
                    .filter(|(fragment, _)| req.system_prompt.contains(fragment.as_str()))
                    .map(|(_, marker)| marker.as_str())
                    .collect();
                if parts.is_empty() {
                    return NEUTRAL_REPLY.to_string();
                }
                let reply = parts.join(" ");
                if parts.contains(&STYLE_MARKERS[0].2) {
                    // A casual reply is casual throughout.
                    reply.to_lowercase().replace('.', "")
                } else {
                    reply
                }
            }
        }
    }
}

impl Generator for StubGenerator {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse> {
        let start = Instant::now();
        let text = self.reply(req);
        Ok(GeneratorResponse {
            text,
            latency_ms: elapsed_ms(start),
            provider_tag: self.tag.clone(),
            refused: false,
        })
    }

    fn provider_tag(&self) -> &str {
        &self.tag
    }
}
