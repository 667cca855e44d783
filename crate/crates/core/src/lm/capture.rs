//! Backend wrappers that record every request, for prompt-inclusion tests
//! and debugging.

use std::sync::{Arc, Mutex};

use super::{
    detokenize, InstructBackend, InstructRequest, LmError, LogitBackend, LogitResult, Token,
    TokenId, Vocab,
};

pub struct RecordingInstruct {
    inner: Arc<dyn InstructBackend>,
    requests: Mutex<Vec<InstructRequest>>,
}

impl RecordingInstruct {
    pub fn new(inner: Arc<dyn InstructBackend>) -> Self {
        Self {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<InstructRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn clear(&self) {
        self.requests.lock().unwrap().clear();
    }
}

impl InstructBackend for RecordingInstruct {
    fn complete(&self, req: &InstructRequest) -> Result<Vec<String>, LmError> {
        self.requests.lock().unwrap().push(req.clone());
        self.inner.complete(req)
    }
}

pub struct RecordingLogit {
    inner: Arc<dyn LogitBackend>,
    prefixes: Mutex<Vec<Vec<TokenId>>>,
    tokenized: Mutex<Vec<String>>,
}

impl RecordingLogit {
    pub fn new(inner: Arc<dyn LogitBackend>) -> Self {
        Self {
            inner,
            prefixes: Mutex::new(Vec::new()),
            tokenized: Mutex::new(Vec::new()),
        }
    }

    /// Every prefix sent to `next_distribution`, in call order (order is
    /// unspecified under parallel execution).
    pub fn prefixes(&self) -> Vec<Vec<TokenId>> {
        self.prefixes.lock().unwrap().clone()
    }

    /// Every prefix rendered back to text.
    pub fn prefix_texts(&self) -> Vec<String> {
        let vocab = self.inner.vocab();
        self.prefixes()
            .iter()
            .map(|p| {
                let toks: Vec<Token> = p
                    .iter()
                    .map(|&id| Token {
                        id,
                        surface: vocab.surface(id).unwrap_or("\u{fffd}").to_owned(),
                    })
                    .collect();
                detokenize(&toks)
            })
            .collect()
    }

    /// Every text passed to `tokenize`.
    pub fn tokenized_texts(&self) -> Vec<String> {
        self.tokenized.lock().unwrap().clone()
    }

    pub fn clear(&self) {
        self.prefixes.lock().unwrap().clear();
        self.tokenized.lock().unwrap().clear();
    }
}

impl LogitBackend for RecordingLogit {
    fn vocab(&self) -> &Vocab {
        self.inner.vocab()
    }

    fn tokenize(&self, text: &str) -> Result<Vec<Token>, LmError> {
        self.tokenized.lock().unwrap().push(text.to_owned());
        self.inner.tokenize(text)
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<LogitResult, LmError> {
        self.prefixes.lock().unwrap().push(prefix.to_vec());
        self.inner.next_distribution(prefix)
    }
}
