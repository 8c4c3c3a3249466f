/// Fresh names have the form `base%N`; `%` never occurs in source text, so
/// fresh names cannot collide with user names.
#[derive(Clone, Debug)]
pub struct NameGen {
    next: u64,
}

impl NameGen {
    pub fn new(seed: u64) -> Self {
        NameGen { next: seed }
    }

    pub fn fresh(&mut self, hint: &str) -> String {
        let n = self.next;
        self.next += 1;
        format!("{}%{n}", base_name(hint))
    }
}

impl Default for NameGen {
    fn default() -> Self {
        NameGen::new(0)
    }
}

pub fn base_name(name: &str) -> &str {
    match name.find('%') {
        Some(0) => "v",
        Some(i) => &name[..i],
        None => name,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_names_strip_previous_suffix() {
        let mut g = NameGen::new(7);
        let a = g.fresh("ft");
        let b = g.fresh(&a);
        assert_eq!(a, "ft%7");
        assert_eq!(b, "ft%8");
        assert_eq!(base_name(&b), "ft");
    }
}
