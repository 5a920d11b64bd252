use super::{parse_instance, PoolingInstance};

pub const FIXTURE_NAMES: [&str; 4] = ["haverly1", "haverly2", "haverly3", "bental4"];

const HAVERLY: [&str; 3] = [
    include_str!("../../fixtures/haverly1.pool"),
    include_str!("../../fixtures/haverly2.pool"),
    include_str!("../../fixtures/haverly3.pool"),
];

const BENTAL4: &str = include_str!("../../fixtures/bental4.pool");

/// Haverly network, `variant` in 1..=3.
pub fn haverly(variant: usize) -> PoolingInstance {
    assert!((1..=3).contains(&variant), "Haverly variants are 1, 2 and 3");
    let mut inst = parse_instance(HAVERLY[variant - 1]).expect("bundled fixture parses");
    inst.name = format!("haverly{variant}");
    inst
}

pub fn bental4() -> PoolingInstance {
    let mut inst = parse_instance(BENTAL4).expect("bundled fixture parses");
    inst.name = "bental4".into();
    inst
}

/// Looks up a bundled fixture by name.
pub fn fixture(name: &str) -> Option<PoolingInstance> {
    match name {
        "haverly1" => Some(haverly(1)),
        "haverly2" => Some(haverly(2)),
        "haverly3" => Some(haverly(3)),
        "bental4" => Some(bental4()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_sizes() {
        for v in 1..=3 {
            let h = haverly(v);
            assert_eq!((h.num_nodes(), h.num_arcs()), (6, 6));
        }
        assert_eq!(bental4().num_nodes(), 7);
        assert!(FIXTURE_NAMES.iter().all(|n| fixture(n).is_some()));
    }
}
