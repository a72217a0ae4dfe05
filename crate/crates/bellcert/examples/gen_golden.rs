fn main() {
    let model = bellcert::npa::build_moment_model();
    println!("{}", serde_json::to_string_pretty(&model.to_json()).unwrap());
}
