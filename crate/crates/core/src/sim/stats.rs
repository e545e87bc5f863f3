use serde::Serialize;

use crate::isa::InstrClass;

/// Executed-instruction counts per class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ClassCounts {
    pub vector_mem: u64,
    pub vector_arith: u64,
    pub vector_control: u64,
    pub scalar: u64,
}

impl ClassCounts {
    pub fn get(&self, class: InstrClass) -> u64 {
        match class {
            InstrClass::VectorMem => self.vector_mem,
            InstrClass::VectorArith => self.vector_arith,
            InstrClass::VectorControl => self.vector_control,
            InstrClass::Scalar => self.scalar,
        }
    }

    fn bump(&mut self, class: InstrClass) {
        match class {
            InstrClass::VectorMem => self.vector_mem += 1,
            InstrClass::VectorArith => self.vector_arith += 1,
            InstrClass::VectorControl => self.vector_control += 1,
            InstrClass::Scalar => self.scalar += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.vector_mem + self.vector_arith + self.vector_control + self.scalar
    }
}

/// Dynamic cost of one simulation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TraceStats {
    pub dynamic_count: u64,
    pub per_class: ClassCounts,
    pub strip_iterations: u64,
}

impl TraceStats {
    pub fn record(&mut self, class: InstrClass) {
        self.dynamic_count += 1;
        self.per_class.bump(class);
    }
}
