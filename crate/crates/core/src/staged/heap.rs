use super::printer::HeapView;
use super::term::{EnvId, FragmentId, Lambda, Term};

#[derive(Clone, Debug)]
pub struct FragmentData {
    pub arity: usize,
    pub subject: Lambda,
}

/// Objects referred to by handle: fragments and mutable environments.
#[derive(Clone, Debug, Default)]
pub struct Heap {
    fragments: Vec<FragmentData>,
    envs: Vec<Vec<(Term, Term)>>,
}

impl Heap {
    pub fn alloc_fragment(&mut self, data: FragmentData) -> FragmentId {
        self.fragments.push(data);
        FragmentId(self.fragments.len() - 1)
    }

    pub fn fragment(&self, id: FragmentId) -> &FragmentData {
        &self.fragments[id.0]
    }

    pub fn new_env(&mut self) -> EnvId {
        self.envs.push(Vec::new());
        EnvId(self.envs.len() - 1)
    }

    /// Inserts or overwrites `key`; insertion order is kept for display.
    pub fn env_insert(&mut self, env: EnvId, key: Term, value: Term) {
        let entries = &mut self.envs[env.0];
        match entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => entries.push((key, value)),
        }
    }

    pub fn env_lookup(&self, env: EnvId, key: &Term) -> Option<Term> {
        self.envs[env.0]
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
    }

    pub fn env(&self, env: EnvId) -> &[(Term, Term)] {
        &self.envs[env.0]
    }
}

impl HeapView for Heap {
    fn env_entries(&self, env: EnvId) -> Option<Vec<(Term, Term)>> {
        self.envs.get(env.0).cloned()
    }

    fn fragment_arity(&self, frag: FragmentId) -> Option<usize> {
        self.fragments.get(frag.0).map(|f| f.arity)
    }
}
