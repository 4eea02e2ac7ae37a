use std::fmt;
use std::io;

use super::files::DiskLayout;
use crate::model::Pid;

/// Points inside a write at which a test can force an abort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultPoint {
    Prepared,
    ContentStaged,
    ObjectWritten,
    BeforeCommit,
}

impl FaultPoint {
    pub const ALL: [FaultPoint; 4] = [
        FaultPoint::Prepared,
        FaultPoint::ContentStaged,
        FaultPoint::ObjectWritten,
        FaultPoint::BeforeCommit,
    ];
}

impl fmt::Display for FaultPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultPoint::Prepared => "prepared",
            FaultPoint::ContentStaged => "content-staged",
            FaultPoint::ObjectWritten => "object-written",
            FaultPoint::BeforeCommit => "before-commit",
        })
    }
}

enum Undo {
    Content { id: String, previous: Option<Vec<u8>> },
    Object { pid: Pid, previous: Option<Vec<u8>> },
}

/// Durable writes of one operation, reversible until the caller commits.
pub(crate) struct UndoLog<'a> {
    files: &'a DiskLayout,
    entries: Vec<Undo>,
}

impl<'a> UndoLog<'a> {
    pub fn new(files: &'a DiskLayout) -> Self {
        UndoLog {
            files,
            entries: Vec::new(),
        }
    }

    pub fn write_content(&mut self, id: &str, bytes: &[u8]) -> io::Result<()> {
        let previous = self.files.read_content(id)?;
        self.entries.push(Undo::Content {
            id: id.to_string(),
            previous,
        });
        self.files.write_content(id, bytes)
    }

    pub fn write_object(&mut self, pid: &Pid, bytes: &[u8]) -> io::Result<()> {
        let previous = self.files.read_object(pid)?;
        self.entries.push(Undo::Object {
            pid: pid.clone(),
            previous,
        });
        self.files.write_object(pid, bytes)
    }

    pub fn remove_object(&mut self, pid: &Pid) -> io::Result<()> {
        let previous = self.files.read_object(pid)?;
        self.entries.push(Undo::Object {
            pid: pid.clone(),
            previous,
        });
        self.files.remove_object(pid)
    }

    /// Restores every touched file to its state before the operation.
    pub fn rollback(self) {
        for entry in self.entries.into_iter().rev() {
            let outcome = match &entry {
                Undo::Content { id, previous: Some(bytes) } => self.files.write_content(id, bytes),
                Undo::Content { id, previous: None } => self.files.remove_content(id),
                Undo::Object { pid, previous: Some(bytes) } => self.files.write_object(pid, bytes),
                Undo::Object { pid, previous: None } => self.files.remove_object(pid),
            };
            if let Err(e) = outcome {
                tracing::error!(error = %e, "rollback step failed");
            }
        }
    }

    pub fn commit(self) {}
}
