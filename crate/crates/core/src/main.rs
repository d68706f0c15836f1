fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("SOS_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("SOS_WORKERS ignored: {e}");
        }
    }
    std::process::exit(sos_core::cli::run(std::env::args_os()));
}
