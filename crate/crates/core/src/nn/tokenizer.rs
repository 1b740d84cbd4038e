use serde::{Deserialize, Serialize};

use crate::hashing::fnv1a64;
use crate::{Error, Result};

pub const BOS: usize = 0;
pub const NEWLINE: usize = 1;
const LETTER_BARE: usize = 2;
const LETTER_SPACED: usize = 12;
const YES: usize = 22;
const NO: usize = 23;
const PERIOD: usize = 24;
const QUESTION: usize = 25;
const HASHED: usize = 32;
pub const LETTERS: usize = 10;

/// Word-level hashing tokenizer with a few reserved ids: BOS, newline,
/// option letters A..J (bare and space-prefixed), "yes", "no" and common
/// punctuation. Every other word lands in a hash bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    vocab_size: usize,
}

impl Tokenizer {
    pub fn new(vocab_size: usize) -> Result<Tokenizer> {
        if vocab_size < HASHED + 16 {
            return Err(Error::Config(format!("toy vocabulary needs at least {} tokens", HASHED + 16)));
        }
        Ok(Tokenizer { vocab_size })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn letter_ids(letter: char) -> Option<[usize; 2]> {
        let i = (letter as u32).checked_sub('A' as u32)? as usize;
        (i < LETTERS).then_some([LETTER_BARE + i, LETTER_SPACED + i])
    }

    fn word_id(&self, word: &str) -> usize {
        if word.len() == 1 {
            if let Some([bare, _]) = Tokenizer::letter_ids(word.chars().next().unwrap_or(' ')) {
                return bare;
            }
        }
        match word.to_ascii_lowercase().as_str() {
            "yes" => YES,
            "no" => NO,
            lower => HASHED + (fnv1a64(lower.as_bytes()) % (self.vocab_size - HASHED) as u64) as usize,
        }
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        let mut out = Vec::new();
        let mut word = String::new();
        let flush = |word: &mut String, out: &mut Vec<usize>| {
            if !word.is_empty() {
                out.push(self.word_id(word));
                word.clear();
            }
        };
        for ch in text.chars() {
            if ch.is_alphanumeric() || ch == '\'' || ch == '-' {
                word.push(ch);
                continue;
            }
            flush(&mut word, &mut out);
            match ch {
                '\n' => out.push(NEWLINE),
                '.' => out.push(PERIOD),
                '?' => out.push(QUESTION),
                c if c.is_whitespace() => {}
                c => out.push(self.word_id(&c.to_string())),
            }
        }
        flush(&mut word, &mut out);
        out
    }
}
