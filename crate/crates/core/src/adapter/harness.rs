//! Concurrent, resumable evaluation over (image, prompt) pairs.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{query_options, ImageInput, ModelAdapter, OptionResponse};
use crate::prompts::PromptInstance;
use crate::{Error, Result};

/// Map `f` over `items` with up to `workers` scoped threads; output order
/// matches input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every slot filled")).collect()
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Caps the adapter's own limit.
    pub max_in_flight: Option<usize>,
    pub retries: usize,
    /// Pairs dispatched per round; results are written after each round.
    pub chunk_size: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { max_in_flight: None, retries: 2, chunk_size: 256 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalSummary {
    pub total_pairs: usize,
    pub skipped_existing: usize,
    pub written: usize,
}

fn query_with_retries<A: ModelAdapter + ?Sized>(
    adapter: &A,
    image: &ImageInput,
    prompt: &PromptInstance,
    retries: usize,
) -> Result<OptionResponse> {
    let mut attempt = 0;
    loop {
        match query_options(adapter, image, prompt) {
            Err(e) if e.is_retriable() && attempt < retries => {
                attempt += 1;
                log::warn!("retrying {} / {} after: {e}", image.id, prompt.prompt_id);
            }
            other => return other,
        }
    }
}

/// Query every (image, prompt) pair not already in `done`, passing responses
/// to `sink` in image-major order. On a failure after retries, everything
/// that succeeded before it in the current round is still written and the
/// error is returned.
pub fn evaluate_pairs<A, S>(
    adapter: &A,
    images: &[ImageInput],
    prompts: &[PromptInstance],
    done: &HashSet<(String, String)>,
    options: &EvalOptions,
    mut sink: S,
) -> Result<EvalSummary>
where
    A: ModelAdapter + ?Sized,
    S: FnMut(OptionResponse) -> Result<()>,
{
    let mut pending = Vec::new();
    let mut summary = EvalSummary { total_pairs: images.len() * prompts.len(), ..Default::default() };
    for image in images {
        for prompt in prompts {
            if done.contains(&(image.id.clone(), prompt.prompt_id.clone())) {
                summary.skipped_existing += 1;
            } else {
                pending.push((image, prompt));
            }
        }
    }
    let workers = options.max_in_flight.map_or(adapter.max_in_flight(), |m| m.min(adapter.max_in_flight())).max(1);
    let chunk = options.chunk_size.max(1);
    for round in pending.chunks(chunk) {
        let results = parallel_map(round, workers, |(image, prompt)| query_with_retries(adapter, image, prompt, options.retries));
        for r in results {
            match r {
                Ok(resp) => {
                    sink(resp)?;
                    summary.written += 1;
                }
                Err(e) => {
                    return Err(match e {
                        Error::Transport(msg) => Error::Transport(format!("{msg} (after {} retries)", options.retries)),
                        other => other,
                    })
                }
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..100).collect();
        let out = parallel_map(&items, 4, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&Vec::<u32>::new(), 4, |x| *x).is_empty());
    }
}
