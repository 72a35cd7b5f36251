/// Which of the two shifted orderings a position follows: `Low` starts at
/// the first fixed label c1, `High` at the second, c2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Low,
    High,
}

impl Branch {
    pub fn flip(self) -> Branch {
        match self {
            Branch::Low => Branch::High,
            Branch::High => Branch::Low,
        }
    }
}
