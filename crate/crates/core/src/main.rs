use std::io::{stderr, stdout};

/// Worker-thread count for the data-parallel loops; unset or invalid means
/// one per core.
const THREADS_ENV: &str = "TSPECTRA_THREADS";

fn main() {
    #[cfg(feature = "parallel")]
    if let Some(threads) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = THREADS_ENV;
    let code = tspectra::cli::run(std::env::args_os(), &mut stdout().lock(), &mut stderr().lock());
    std::process::exit(code);
}
