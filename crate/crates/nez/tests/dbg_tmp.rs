#[test]
fn dbg() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../grammars");
    let text = std::fs::read_to_string(dir.join("typedef.nez")).unwrap();
    let mut g = nez::parse_grammar(&text).unwrap();
    g.set_start("TypeName").unwrap();
    let input = b"uint";
    let oracle = nez::parse(&g, input).unwrap();
    println!("interp: {oracle:?}");
    let program = nez::compile(&g, &nez::vm::CompileOptions::default()).unwrap();
    let vm = nez::vm::Machine::new(&program).run(input, nez::vm::RunMode::Parse).unwrap();
    println!("vm:     {vm:?}");
}
