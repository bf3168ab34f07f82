fn main() {
    std::process::exit(semigroup_lab::run());
}
