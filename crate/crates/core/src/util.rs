//! Small shared helpers: embedded data files, bounded parallel map, hashing.

use sha2::{Digest, Sha256};

/// Data files compiled into the library.
pub mod data {
    pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");
    pub const LEMMA_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.tsv");
    pub const TAGGER_LEXICON: &str = include_str!("../data/tagger_lexicon.tsv");
    pub const POS_MAP: &str = include_str!("../data/pos_map.tsv");
}

/// Hex-encoded SHA-256 of the given byte chunks.
pub fn sha256_hex(chunks: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for chunk in chunks {
        hasher.update(chunk);
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Apply `f` to every item on up to `jobs` worker threads. Results come back
/// in input order; the first error wins and is returned after all workers
/// stop picking up new items.
pub fn parallel_map<T, R, E, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs <= 1 {
        return items
            .iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let failed = std::sync::atomic::AtomicBool::new(false);
    let slots: Vec<std::sync::Mutex<Option<Result<R, E>>>> =
        items.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                if failed.load(std::sync::atomic::Ordering::Relaxed) {
                    return;
                }
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    return;
                }
                let result = f(i, &items[i]);
                if result.is_err() {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    let mut out = Vec::with_capacity(items.len());
    let mut first_error = None;
    for slot in slots {
        match slot.into_inner().unwrap() {
            Some(Ok(value)) => out.push(value),
            Some(Err(e)) => {
                first_error.get_or_insert(e);
            }
            None => {}
        }
    }
    match first_error {
        Some(e) => Err(e),
        None if out.len() == items.len() => Ok(out),
        // A worker bailed early after another failed; the error slot was
        // consumed above, so this branch is unreachable in practice.
        None => unreachable!("parallel_map lost results without an error"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_is_stable() {
        let a = sha256_hex(&[b"model", b"prompt"]);
        let b = sha256_hex(&[b"model", b"prompt"]);
        assert_eq!(a, b);
        assert_ne!(a, sha256_hex(&[b"modelp", b"rompt"]));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn parallel_map_preserves_order() {
        let items: Vec<usize> = (0..100).collect();
        let out = parallel_map(&items, 8, |_, &x| Ok::<_, ()>(x * 2)).unwrap();
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn parallel_map_propagates_error() {
        let items: Vec<usize> = (0..50).collect();
        let err = parallel_map(&items, 4, |_, &x| if x == 25 { Err("boom") } else { Ok(x) });
        assert_eq!(err.unwrap_err(), "boom");
    }
}
