use qtomo_bench::Fixture;

#[test]
fn fixture_shapes() {
    let f = Fixture::ghz(5, 200, 1024, 0).unwrap();
    assert_eq!(f.ensemble.dim(), 32);
    assert_eq!(f.y.len(), 200);
    assert_eq!(f.x0.width(), 1);
    assert_eq!(f.state.rank(), 1);
    let t = f.tangent().unwrap();
    assert!(t.frobenius_norm_sq() > 0.0);
}
