//! Deterministic mock assistants.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{ModelAdapter, Query, SymbolTokenSets, TokenId};
use crate::curation::Gender;
use crate::hashing::{fnv_parts, unit_interval};
use crate::{Error, Result};

const LETTERS: usize = 10;
const YES_BASE: TokenId = 20;
const NO_BASE: TokenId = 24;
const FILLER_BASE: usize = 28;

/// Small fixed vocabulary shared by the mocks: option letters A..J (bare and
/// space-prefixed), four spellings each of "yes" and "no", then filler tokens.
#[derive(Debug, Clone)]
pub struct MockVocab {
    size: usize,
    symbols: SymbolTokenSets,
}

impl MockVocab {
    pub fn new(size: usize) -> Result<MockVocab> {
        if size <= FILLER_BASE {
            return Err(Error::Config(format!("mock vocabulary needs more than {FILLER_BASE} tokens")));
        }
        let sets = (0..LETTERS)
            .map(|i| ((b'A' + i as u8) as char, vec![i as TokenId, (LETTERS + i) as TokenId]))
            .collect();
        Ok(MockVocab { size, symbols: SymbolTokenSets::new(sets)? })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn symbols(&self) -> &SymbolTokenSets {
        &self.symbols
    }

    pub fn bare_letter(letter: char) -> TokenId {
        (letter as u8 - b'A') as TokenId
    }

    pub fn answer_tokens(answer: &str) -> Vec<TokenId> {
        let first = answer.split_whitespace().next().unwrap_or("").trim_matches(|c: char| !c.is_alphanumeric());
        match first.to_ascii_lowercase().as_str() {
            "yes" => (YES_BASE..YES_BASE + 4).collect(),
            "no" => (NO_BASE..NO_BASE + 4).collect(),
            _ => Vec::new(),
        }
    }

    /// Place `letters` on bare letter tokens and `words` on the first spelling
    /// of each answer word; spread the remainder over filler tokens.
    pub fn distribution(&self, letters: &[(char, f64)], words: &[(&str, f64)]) -> Result<Vec<f64>> {
        let mut dist = vec![0.0; self.size];
        let mut total = 0.0;
        for &(l, p) in letters {
            if !l.is_ascii_uppercase() || (l as u8 - b'A') as usize >= LETTERS {
                return Err(Error::Config(format!("mock vocabulary has no letter {l}")));
            }
            dist[Self::bare_letter(l) as usize] += p;
            total += p;
        }
        for &(w, p) in words {
            let ids = Self::answer_tokens(w);
            let id = *ids.first().ok_or_else(|| Error::Config(format!("mock vocabulary has no word '{w}'")))?;
            dist[id as usize] += p;
            total += p;
        }
        if total > 1.0 + 1e-9 || dist.iter().any(|p| *p < 0.0) {
            return Err(Error::Config(format!("mock probabilities are invalid (total {total})")));
        }
        let rest = (1.0 - total).max(0.0) / (self.size - FILLER_BASE) as f64;
        for p in &mut dist[FILLER_BASE..] {
            *p = rest;
        }
        Ok(dist)
    }
}

/// Option lines `"X. text"` of a prompt, in order.
pub(crate) fn parse_options(text: &str) -> Vec<(char, &str)> {
    text.lines()
        .filter_map(|line| {
            let mut chars = line.chars();
            let letter = chars.next()?;
            if letter.is_ascii_uppercase() && line[1..].starts_with(". ") {
                Some((letter, &line[3..]))
            } else {
                None
            }
        })
        .collect()
}

/// Letters of the yes, no and unsure options of a three-way prompt.
fn yes_no_unsure(text: &str) -> Result<(char, char, char)> {
    let opts = parse_options(text);
    let find = |t: &str| opts.iter().find(|(_, o)| o.eq_ignore_ascii_case(t)).map(|(l, _)| *l);
    let yes = find("Yes").ok_or_else(|| Error::Data("prompt has no 'Yes' option".into()))?;
    let no = find("No").ok_or_else(|| Error::Data("prompt has no 'No' option".into()))?;
    let unsure = opts
        .iter()
        .map(|(l, _)| *l)
        .find(|l| *l != yes && *l != no)
        .ok_or_else(|| Error::Data("prompt has no third option".into()))?;
    Ok((yes, no, unsure))
}

/// Emits the same letter and word probabilities for every query.
#[derive(Debug, Clone)]
pub struct FixedMock {
    model_id: String,
    vocab: MockVocab,
    letters: Vec<(char, f64)>,
    words: Vec<(String, f64)>,
}

impl FixedMock {
    pub fn new(model_id: &str, letters: &[(char, f64)], words: &[(&str, f64)]) -> Result<FixedMock> {
        let vocab = MockVocab::new(64)?;
        let w: Vec<(&str, f64)> = words.to_vec();
        vocab.distribution(letters, &w)?;
        Ok(FixedMock {
            model_id: model_id.to_string(),
            vocab,
            letters: letters.to_vec(),
            words: words.iter().map(|(w, p)| (w.to_string(), *p)).collect(),
        })
    }

    /// A judge answering "yes" with probability `p_yes` and "no" otherwise.
    pub fn judge(model_id: &str, p_yes: f64) -> Result<FixedMock> {
        FixedMock::new(model_id, &[], &[("yes", p_yes), ("no", 1.0 - p_yes)])
    }
}

impl ModelAdapter for FixedMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn vocab_size(&self) -> usize {
        self.vocab.size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.vocab.symbols()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        MockVocab::answer_tokens(answer)
    }
    fn next_token_distribution(&self, _query: &Query<'_>) -> Result<Vec<f64>> {
        let words: Vec<(&str, f64)> = self.words.iter().map(|(w, p)| (w.as_str(), *p)).collect();
        self.vocab.distribution(&self.letters, &words)
    }
}

/// Constant logits over the whole vocabulary; each symbol owns `variants` tokens.
#[derive(Debug, Clone)]
pub struct UniformMock {
    vocab_size: usize,
    symbols: SymbolTokenSets,
}

impl UniformMock {
    pub fn new(vocab_size: usize, variants: usize) -> Result<UniformMock> {
        if variants == 0 || vocab_size < LETTERS * variants {
            return Err(Error::Config("vocabulary too small for the requested symbol variants".into()));
        }
        let sets = (0..LETTERS)
            .map(|i| {
                let start = (i * variants) as TokenId;
                ((b'A' + i as u8) as char, (start..start + variants as TokenId).collect())
            })
            .collect();
        Ok(UniformMock { vocab_size, symbols: SymbolTokenSets::new(sets)? })
    }
}

impl ModelAdapter for UniformMock {
    fn model_id(&self) -> &str {
        "mock-uniform"
    }
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        &self.symbols
    }
    fn answer_tokens(&self, _answer: &str) -> Vec<TokenId> {
        Vec::new()
    }
    fn next_token_distribution(&self, _query: &Query<'_>) -> Result<Vec<f64>> {
        // softmax of constant logits
        let logits = vec![0.0f64; self.vocab_size];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / z).collect())
    }
}

/// Beta parameters of p(yes) for each gender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenderBeta {
    pub male: (f64, f64),
    pub female: (f64, f64),
}

fn beta_from_moments(mean: f64, sd: f64) -> Result<(f64, f64)> {
    let var = sd * sd;
    if !(0.0 < mean && mean < 1.0) || var <= 0.0 || var >= mean * (1.0 - mean) {
        return Err(Error::Config(format!("no Beta distribution with mean {mean} and sd {sd}")));
    }
    let k = mean * (1.0 - mean) / var - 1.0;
    Ok((mean * k, (1.0 - mean) * k))
}

impl GenderBeta {
    pub fn from_moments(male_mean: f64, female_mean: f64, sd: f64) -> Result<GenderBeta> {
        Ok(GenderBeta { male: beta_from_moments(male_mean, sd)?, female: beta_from_moments(female_mean, sd)? })
    }

    pub fn unbiased(mean: f64, sd: f64) -> Result<GenderBeta> {
        GenderBeta::from_moments(mean, mean, sd)
    }

    fn params(&self, g: Gender) -> (f64, f64) {
        match g {
            Gender::Male => self.male,
            Gender::Female => self.female,
        }
    }
}

/// Draws p(yes) from a gender-conditional Beta distribution, seeded per
/// (image, prompt) so repeated queries agree. Per-attribute overrides allow
/// planting biased attributes.
#[derive(Debug, Clone)]
pub struct BetaMock {
    model_id: String,
    vocab: MockVocab,
    default: GenderBeta,
    overrides: BTreeMap<String, GenderBeta>,
    seed: u64,
    symbol_mass: f64,
    no_share: f64,
}

impl BetaMock {
    pub fn new(model_id: &str, default: GenderBeta, seed: u64) -> Result<BetaMock> {
        Ok(BetaMock {
            model_id: model_id.to_string(),
            vocab: MockVocab::new(32)?,
            default,
            overrides: BTreeMap::new(),
            seed,
            symbol_mass: 1.0,
            no_share: 0.7,
        })
    }

    pub fn with_override(mut self, attribute: &str, beta: GenderBeta) -> BetaMock {
        self.overrides.insert(attribute.to_string(), beta);
        self
    }

    /// Total mass on the three option letters; the rest goes to filler tokens.
    pub fn with_symbol_mass(mut self, mass: f64) -> BetaMock {
        self.symbol_mass = mass;
        self
    }

    /// Draw p(yes) for an image of `gender` answering `prompt_key` about `attribute`.
    pub fn draw(&self, attribute: Option<&str>, gender: Gender, image_id: &str, prompt_key: &str) -> f64 {
        let beta = attribute.and_then(|a| self.overrides.get(a)).unwrap_or(&self.default);
        let (a, b) = beta.params(gender);
        let seed = fnv_parts(&[&self.seed.to_string(), image_id, prompt_key]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Beta::new(a, b).expect("validated Beta parameters").sample(&mut rng)
    }
}

impl ModelAdapter for BetaMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn vocab_size(&self) -> usize {
        self.vocab.size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.vocab.symbols()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        MockVocab::answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        let gender = query
            .image
            .gender
            .ok_or_else(|| Error::Data(format!("beta mock needs the gender of image {}", query.image.id)))?;
        let (yes, no, unsure) = yes_no_unsure(query.text)?;
        let attribute = query.prompt.map(|p| p.attribute.attribute.as_str());
        let key = query.prompt.map_or(query.text, |p| p.prompt_id.as_str());
        let u = self.draw(attribute, gender, &query.image.id, key);
        let m = self.symbol_mass;
        self.vocab.distribution(
            &[(yes, m * u), (no, m * (1.0 - u) * self.no_share), (unsure, m * (1.0 - u) * (1.0 - self.no_share))],
            &[],
        )
    }
}

/// Deterministic mock: p(yes) depends only on the prompt, plus a fixed shift
/// of +delta/2 for the favoured gender (and -delta/2 for the other) on
/// planted attributes. Unplanted attributes give identical samples for both
/// genders when each gender sees the same prompts equally often.
#[derive(Debug, Clone)]
pub struct PlantedMock {
    model_id: String,
    vocab: MockVocab,
    base: f64,
    spread: f64,
    delta: f64,
    planted: BTreeMap<String, Gender>,
}

impl PlantedMock {
    pub fn new(model_id: &str, planted: BTreeMap<String, Gender>, delta: f64) -> Result<PlantedMock> {
        if !(0.0..=0.4).contains(&delta) {
            return Err(Error::Config("planted delta must be in [0, 0.4]".into()));
        }
        Ok(PlantedMock { model_id: model_id.to_string(), vocab: MockVocab::new(32)?, base: 0.3, spread: 0.2, delta, planted })
    }

    pub fn p_yes(&self, attribute: Option<&str>, gender: Gender, prompt_key: &str) -> f64 {
        let mut p = self.base + self.spread * unit_interval(fnv_parts(&[prompt_key]));
        if let Some(favoured) = attribute.and_then(|a| self.planted.get(a)) {
            p += if *favoured == gender { self.delta / 2.0 } else { -self.delta / 2.0 };
        }
        p
    }
}

impl ModelAdapter for PlantedMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn vocab_size(&self) -> usize {
        self.vocab.size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.vocab.symbols()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        MockVocab::answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        let gender = query
            .image
            .gender
            .ok_or_else(|| Error::Data(format!("planted mock needs the gender of image {}", query.image.id)))?;
        let (yes, no, unsure) = yes_no_unsure(query.text)?;
        let attribute = query.prompt.map(|p| p.attribute.attribute.as_str());
        let key = query.prompt.map_or(query.text, |p| p.prompt_id.as_str());
        let p = self.p_yes(attribute, gender, key);
        let rest = 1.0 - p;
        self.vocab.distribution(&[(yes, p), (no, 0.6 * rest), (unsure, 0.3 * rest)], &[])
    }
}

/// Answers probe prompts by reading the image's ground-truth label (or, with
/// `anti`, by choosing the next option after the correct one).
#[derive(Debug, Clone)]
pub struct OracleMock {
    vocab: MockVocab,
    anti: bool,
}

impl OracleMock {
    pub fn new(anti: bool) -> Result<OracleMock> {
        Ok(OracleMock { vocab: MockVocab::new(32)?, anti })
    }
}

impl ModelAdapter for OracleMock {
    fn model_id(&self) -> &str {
        if self.anti {
            "mock-anti-oracle"
        } else {
            "mock-oracle"
        }
    }
    fn vocab_size(&self) -> usize {
        self.vocab.size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.vocab.symbols()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        MockVocab::answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        let opts = parse_options(query.text);
        if opts.is_empty() {
            return Err(Error::Data("oracle mock needs a multiple-choice prompt".into()));
        }
        let label = query
            .image
            .label
            .clone()
            .or_else(|| query.image.gender.map(|g| g.as_str().to_string()));
        let correct = label.and_then(|l| opts.iter().position(|(_, o)| o.eq_ignore_ascii_case(&l)));
        match correct {
            Some(i) => {
                let pick = if self.anti { (i + 1) % opts.len() } else { i };
                self.vocab.distribution(&[(opts[pick].0, 0.97)], &[])
            }
            None => {
                let share = 0.97 / opts.len() as f64;
                let letters: Vec<(char, f64)> = opts.iter().map(|(l, _)| (*l, share)).collect();
                self.vocab.distribution(&letters, &[])
            }
        }
    }
}

/// Mock driven by a closure returning letter probabilities.
pub struct FnMock<F> {
    model_id: String,
    vocab: MockVocab,
    f: F,
}

impl<F> FnMock<F>
where
    F: Fn(&Query<'_>) -> Result<Vec<(char, f64)>> + Send + Sync,
{
    pub fn new(model_id: &str, f: F) -> Result<FnMock<F>> {
        Ok(FnMock { model_id: model_id.to_string(), vocab: MockVocab::new(32)?, f })
    }
}

impl<F> ModelAdapter for FnMock<F>
where
    F: Fn(&Query<'_>) -> Result<Vec<(char, f64)>> + Send + Sync,
{
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn vocab_size(&self) -> usize {
        self.vocab.size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.vocab.symbols()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        MockVocab::answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        let letters = (self.f)(query)?;
        self.vocab.distribution(&letters, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_sums_to_one() {
        let v = MockVocab::new(40).unwrap();
        let d = v.distribution(&[('A', 0.5), ('B', 0.3)], &[("yes", 0.1)]).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.distribution(&[('A', 0.9), ('B', 0.3)], &[]).is_err());
    }

    #[test]
    fn parse_option_lines() {
        let opts = parse_options("Q?\nA. No\nB. Cannot tell\nC. Yes\nAnswer.");
        assert_eq!(opts, vec![('A', "No"), ('B', "Cannot tell"), ('C', "Yes")]);
        assert_eq!(yes_no_unsure("Q?\nA. No\nB. Cannot tell\nC. Yes\nAnswer.").unwrap(), ('C', 'A', 'B'));
    }

    #[test]
    fn beta_from_moments_roundtrip() {
        let (a, b) = beta_from_moments(0.3, 0.1).unwrap();
        let mean = a / (a + b);
        let var = a * b / ((a + b).powi(2) * (a + b + 1.0));
        assert!((mean - 0.3).abs() < 1e-12);
        assert!((var.sqrt() - 0.1).abs() < 1e-12);
        assert!(beta_from_moments(0.5, 0.6).is_err());
    }
}
