use std::ops::Range;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;

use crate::compositor::over::over_slices;
use crate::error::{Error, Result};
use crate::field::BlockDecomposition;
use crate::render::{Camera, PartialImage};

/// Bytes carried per premultiplied RGBA pixel in a swap message.
pub const PIXEL_BYTES: usize = 4 * std::mem::size_of::<f64>();

/// Assignment of blocks to `2^m` workers.
///
/// Worker `w` owns the contiguous block ids `w * b .. (w + 1) * b` with
/// `b = blocks / workers`; because block ids encode the bisection path these
/// form one subtree, and workers differing only in bit `k` own sibling
/// subtrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkerTopology {
    n_workers: usize,
    blocks_per_worker: usize,
}

impl WorkerTopology {
    pub fn new(n_workers: usize, block_count: usize) -> Result<Self> {
        if !n_workers.is_power_of_two() || !block_count.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "worker count {n_workers} and block count {block_count} must be powers of two"
            )));
        }
        if n_workers > block_count {
            return Err(Error::Parameter(format!(
                "{n_workers} workers for only {block_count} blocks"
            )));
        }
        Ok(Self {
            n_workers,
            blocks_per_worker: block_count / n_workers,
        })
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn block_count(&self) -> usize {
        self.n_workers * self.blocks_per_worker
    }

    pub fn rounds(&self) -> usize {
        self.n_workers.trailing_zeros() as usize
    }

    pub fn blocks_of(&self, worker: usize) -> Range<usize> {
        worker * self.blocks_per_worker..(worker + 1) * self.blocks_per_worker
    }

    pub fn worker_of(&self, block: usize) -> usize {
        block / self.blocks_per_worker
    }

    pub fn partner(&self, worker: usize, round: usize) -> usize {
        worker ^ (1 << round)
    }
}

/// Front-to-back permutation of block ids with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityOrder {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl VisibilityOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut rank = vec![usize::MAX; order.len()];
        for (r, &b) in order.iter().enumerate() {
            if b >= order.len() || rank[b] != usize::MAX {
                return Err(Error::Parameter(format!("{order:?} is not a permutation")));
            }
            rank[b] = r;
        }
        Ok(Self { order, rank })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rank_of(&self, block: usize) -> usize {
        self.rank[block]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Exact front-to-back order from the bisection tree for this camera.
pub fn visibility_order(decomposition: &BlockDecomposition, camera: &Camera) -> VisibilityOrder {
    VisibilityOrder::new(decomposition.front_to_back(camera.position))
        .expect("tree traversal yields a permutation")
}

/// A contiguous run of the (padded) linearized image owned by one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnedRange {
    pub worker: usize,
    pub start: usize,
    pub pixels: Vec<[f64; 4]>,
}

impl OwnedRange {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.pixels.len()
    }
}

#[derive(Debug, Clone)]
pub struct SwapOutcome {
    pub width: usize,
    pub height: usize,
    /// Pixel count after padding to a multiple of the worker count.
    pub padded_len: usize,
    /// One range per worker, indexed by worker id.
    pub owned: Vec<OwnedRange>,
    /// `bytes_sent[w][k]`: payload bytes worker `w` sent in round `k`.
    pub bytes_sent: Vec<Vec<usize>>,
}

struct Failure {
    error: Error,
    /// Caused by a partner disappearing rather than by this worker.
    cascade: bool,
}

type WorkerResult = std::result::Result<(OwnedRange, Vec<usize>), Failure>;

struct Message {
    rank: usize,
    pixels: Vec<[f64; 4]>,
}

/// Binary-swap compositing of one partial image per worker.
///
/// `partials[w]` is worker `w`'s image, already composited over its own
/// blocks. In round `k` worker `w` exchanges half of its current range with
/// `w ^ (1 << k)`; the worker with bit `k` clear keeps the lower half. The
/// operand order of each over comes from the lowest visibility rank in each
/// partner's merged group.
pub fn binary_swap(
    partials: Vec<PartialImage>,
    order: &VisibilityOrder,
    topology: &WorkerTopology,
) -> Result<SwapOutcome> {
    swap_impl(partials, order, topology, None)
}

pub(crate) fn swap_impl(
    partials: Vec<PartialImage>,
    order: &VisibilityOrder,
    topology: &WorkerTopology,
    fault: Option<(usize, usize)>,
) -> Result<SwapOutcome> {
    let n = topology.n_workers();
    if partials.len() != n {
        return Err(Error::Parameter(format!(
            "{} partial images for {n} workers",
            partials.len()
        )));
    }
    if order.len() != topology.block_count() {
        return Err(Error::Parameter(format!(
            "visibility order over {} blocks, topology has {}",
            order.len(),
            topology.block_count()
        )));
    }
    let (width, height) = (partials[0].width, partials[0].height);
    if let Some(p) = partials
        .iter()
        .find(|p| (p.width, p.height) != (width, height) || p.pixels.len() != width * height)
    {
        return Err(Error::Dimension(format!(
            "partial {}x{} (block {}) differs from {width}x{height}",
            p.width, p.height, p.block_id
        )));
    }
    check_schedule(order, topology)?;

    let total = width * height;
    let padded_len = total.div_ceil(n) * n;
    let rounds = topology.rounds();
    let ranks: Vec<usize> = (0..n)
        .map(|w| {
            topology
                .blocks_of(w)
                .map(|b| order.rank_of(b))
                .min()
                .expect("nonempty")
        })
        .collect();

    // inbox[w][k] receives from w's round-k partner, who holds outbox[partner][k].
    let mut inboxes: Vec<Vec<Receiver<Message>>> =
        (0..n).map(|_| Vec::with_capacity(rounds)).collect();
    let mut outboxes: Vec<Vec<Option<Sender<Message>>>> =
        (0..n).map(|_| vec![None; rounds]).collect();
    for w in 0..n {
        for k in 0..rounds {
            let (tx, rx) = channel();
            inboxes[w].push(rx);
            outboxes[topology.partner(w, k)][k] = Some(tx);
        }
    }

    let results: Vec<WorkerResult> = thread::scope(|s| {
        let handles: Vec<_> = partials
            .into_iter()
            .zip(inboxes)
            .zip(outboxes)
            .enumerate()
            .map(|(w, ((image, inbox), outbox))| {
                let my_rank = ranks[w];
                s.spawn(move || {
                    let mut pixels = image.pixels;
                    pixels.resize(padded_len, [0.0; 4]);
                    swap_worker(w, pixels, my_rank, inbox, outbox, fault)
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(w, h)| {
                h.join().unwrap_or_else(|_| {
                    Err(Failure {
                        error: Error::Pipeline {
                            worker: w,
                            round: 0,
                            reason: "worker thread panicked".into(),
                        },
                        cascade: false,
                    })
                })
            })
            .collect()
    });

    let mut owned = Vec::with_capacity(n);
    let mut bytes_sent = Vec::with_capacity(n);
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok((range, bytes)) => {
                owned.push(range);
                bytes_sent.push(bytes);
            }
            Err(f) => errors.push(f),
        }
    }
    if !errors.is_empty() {
        // A failing worker makes its partners' sends and receives fail too;
        // report the root cause rather than the cascade.
        errors.sort_by_key(|f| {
            let (round, worker) = match f.error {
                Error::Pipeline { round, worker, .. } => (round, worker),
                _ => (usize::MAX, usize::MAX),
            };
            (f.cascade, round, worker)
        });
        return Err(errors.swap_remove(0).error);
    }
    Ok(SwapOutcome {
        width,
        height,
        padded_len,
        owned,
        bytes_sent,
    })
}

fn swap_worker(
    w: usize,
    mut pixels: Vec<[f64; 4]>,
    mut rank: usize,
    inbox: Vec<Receiver<Message>>,
    outbox: Vec<Option<Sender<Message>>>,
    fault: Option<(usize, usize)>,
) -> WorkerResult {
    let mut start = 0;
    let mut bytes = Vec::with_capacity(inbox.len());
    for (k, (rx, tx)) in inbox.into_iter().zip(outbox).enumerate() {
        let fail = |reason: &str, cascade: bool| Failure {
            error: Error::Pipeline {
                worker: w,
                round: k,
                reason: reason.to_string(),
            },
            cascade,
        };
        if fault == Some((w, k)) {
            return Err(fail("worker aborted", false));
        }
        let tx = tx.ok_or_else(|| fail("no channel to partner", false))?;
        let half = pixels.len() / 2;
        let keep_low = w & (1 << k) == 0;
        let outgoing = if keep_low {
            pixels.split_off(half)
        } else {
            pixels.drain(..half).collect()
        };
        bytes.push(outgoing.len() * PIXEL_BYTES);
        tx.send(Message {
            rank,
            pixels: outgoing,
        })
        .map_err(|_| fail("partner hung up before receiving", true))?;
        drop(tx);
        let msg = rx
            .recv()
            .map_err(|_| fail("partner hung up before sending", true))?;
        if msg.pixels.len() != pixels.len() {
            let reason = format!(
                "received {} pixels, expected {}",
                msg.pixels.len(),
                pixels.len()
            );
            return Err(fail(&reason, false));
        }
        let mut merged = vec![[0.0; 4]; pixels.len()];
        if rank < msg.rank {
            over_slices(&pixels, &msg.pixels, &mut merged);
        } else {
            over_slices(&msg.pixels, &pixels, &mut merged);
        }
        pixels = merged;
        rank = rank.min(msg.rank);
        if !keep_low {
            start += half;
        }
    }
    Ok((
        OwnedRange {
            worker: w,
            start,
            pixels,
        },
        bytes,
    ))
}

/// Every group of workers merged after any number of rounds must own a
/// contiguous run of the visibility order, otherwise pairwise over cannot
/// reproduce the serial composite.
fn check_schedule(order: &VisibilityOrder, topology: &WorkerTopology) -> Result<()> {
    for k in 0..=topology.rounds() {
        let group = 1usize << k;
        for g in (0..topology.n_workers()).step_by(group) {
            let ranks: Vec<usize> = (g..g + group)
                .flat_map(|w| topology.blocks_of(w))
                .map(|b| order.rank_of(b))
                .collect();
            let lo = *ranks.iter().min().expect("nonempty");
            let hi = *ranks.iter().max().expect("nonempty");
            if hi - lo + 1 != ranks.len() {
                return Err(Error::Parameter(format!(
                    "visibility order {:?} splits worker group {g}..{} and cannot be binary swapped",
                    order.order(),
                    g + group
                )));
            }
        }
    }
    Ok(())
}
