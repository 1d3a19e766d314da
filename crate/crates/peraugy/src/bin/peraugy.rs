fn main() {
    std::process::exit(peraugy::commands::main());
}
