use serde::Serialize;

const SYSTEM_PROMPT: &str = include_str!("../../data/annotation_system_prompt.txt");

pub const PROMPT_MODEL: &str = "gpt-3.5-turbo";
pub const PROMPT_TEMPERATURE: f64 = 0.0;

/// A chat-completion request for labeling one post.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationPrompt {
    pub model: &'static str,
    pub temperature: f64,
    pub system: String,
    pub user: String,
}

pub fn build_annotation_prompt(message_text: &str) -> AnnotationPrompt {
    AnnotationPrompt {
        model: PROMPT_MODEL,
        temperature: PROMPT_TEMPERATURE,
        system: SYSTEM_PROMPT.to_string(),
        user: format!(
            "Here's a social media post: '{message_text}'. With one word, how would you label this post in terms of emotions?"
        ),
    }
}

impl AnnotationPrompt {
    /// Plain-text rendering: metadata comment lines, then the two turns.
    pub fn render(&self) -> String {
        format!(
            "# model: {}\n# temperature: {}\n[system]\n{}\n[user]\n{}\n",
            self.model, self.temperature, self.system, self.user
        )
    }

    /// Request body in the chat-completions message layout.
    pub fn to_request_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": self.user},
            ],
        })
    }
}
