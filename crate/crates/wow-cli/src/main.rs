fn main() {
    std::process::exit(wow_cli::commands::main_impl());
}
