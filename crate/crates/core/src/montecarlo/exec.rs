/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise seed of one path.
pub fn path_seed(master: u64, eps_index: usize, path_index: usize) -> u64 {
    mix(mix(mix(master) ^ eps_index as u64) ^ path_index as u64)
}

#[cfg(feature = "parallel")]
mod imp {
    use std::sync::OnceLock;

    use rayon::prelude::*;

    fn env_threads() -> Option<usize> {
        std::env::var("ZNL_THREADS")
            .ok()?
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
    }

    fn pool() -> &'static rayon::ThreadPool {
        static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
        POOL.get_or_init(|| {
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(n) = env_threads() {
                b = b.num_threads(n);
            }
            b.build().expect("thread pool")
        })
    }

    pub fn worker_count() -> usize {
        if rayon::current_thread_index().is_some() {
            rayon::current_num_threads()
        } else {
            pool().current_num_threads()
        }
    }

    pub fn with_workers<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f)
    }

    pub fn map_paths<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        let run = || (0..n).into_par_iter().map(&f).collect();
        if rayon::current_thread_index().is_some() {
            run()
        } else {
            pool().install(run)
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn worker_count() -> usize {
        1
    }

    pub fn with_workers<R: Send>(_n: usize, f: impl FnOnce() -> R + Send) -> R {
        f()
    }

    pub fn map_paths<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
    where
        F: Fn(usize) -> Result<T, E>,
    {
        (0..n).map(f).collect()
    }
}

/// Number of workers ensembles run on (`ZNL_THREADS` caps the default pool).
pub fn worker_count() -> usize {
    imp::worker_count()
}

/// Runs `f` with ensembles spread over exactly `n` workers.
pub fn with_workers<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    imp::with_workers(n, f)
}

/// Per-path results in path order.
pub(crate) use imp::map_paths;
