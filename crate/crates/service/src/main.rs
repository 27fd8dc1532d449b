fn main() {
    std::process::exit(dfs_service::cli::run(std::env::args()));
}
