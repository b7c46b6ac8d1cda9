use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Default minibatch sizes for the three training phases.
pub const WORD_BATCH: usize = 10;
pub const SENTENCE_BATCH: usize = 64;
pub const DIALOGUE_BATCH: usize = 8;

/// Shuffles `0..n` with `rng` and cuts it into batches of `batch_size`; the
/// last batch may be short.
///
/// ```
/// use rand::SeedableRng;
/// let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
/// let sizes: Vec<usize> = hcrn::corpus::make_batches(25, 10, &mut rng).unwrap().iter().map(Vec::len).collect();
/// assert_eq!(sizes, [10, 10, 5]);
/// ```
pub fn make_batches<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
