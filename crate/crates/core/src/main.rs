fn main() {
    cleer::cli::prefer_heap_reuse();
    std::process::exit(cleer::cli::run(std::env::args_os()));
}
