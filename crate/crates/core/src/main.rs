fn main() {
    std::process::exit(replica_harmony::cli::run(std::env::args_os()));
}
