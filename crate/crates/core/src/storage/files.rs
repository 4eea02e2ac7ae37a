use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::model::Pid;

const FILE_NAME: &AsciiSet = &NON_ALPHANUMERIC.remove(b'.').remove(b'-').remove(b'_').remove(b'~');

fn encode(name: &str) -> String {
    utf8_percent_encode(name, FILE_NAME).to_string()
}

/// One FOXML file per object and one file per managed content version.
pub(crate) struct DiskLayout {
    objects: PathBuf,
    content: PathBuf,
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path)
}

fn read_optional(path: &Path) -> io::Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(bytes)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn remove_optional(path: &Path) -> io::Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

impl DiskLayout {
    pub fn open(root: &Path) -> io::Result<Self> {
        let layout = DiskLayout {
            objects: root.join("objects"),
            content: root.join("content"),
        };
        fs::create_dir_all(&layout.objects)?;
        fs::create_dir_all(&layout.content)?;
        Ok(layout)
    }

    pub fn object_path(&self, pid: &Pid) -> PathBuf {
        self.objects.join(format!("{}.xml", encode(&pid.to_string())))
    }

    pub fn content_path(&self, internal_id: &str) -> PathBuf {
        self.content.join(encode(internal_id))
    }

    pub fn read_object(&self, pid: &Pid) -> io::Result<Option<Vec<u8>>> {
        read_optional(&self.object_path(pid))
    }

    pub fn write_object(&self, pid: &Pid, bytes: &[u8]) -> io::Result<()> {
        write_atomically(&self.object_path(pid), bytes)
    }

    pub fn remove_object(&self, pid: &Pid) -> io::Result<()> {
        remove_optional(&self.object_path(pid))
    }

    /// Every `*.xml` file in the object directory.
    pub fn object_files(&self) -> io::Result<Vec<PathBuf>> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.objects)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "xml"))
            .collect();
        files.sort();
        Ok(files)
    }

    pub fn read_content(&self, internal_id: &str) -> io::Result<Option<Vec<u8>>> {
        read_optional(&self.content_path(internal_id))
    }

    pub fn has_content(&self, internal_id: &str) -> bool {
        self.content_path(internal_id).is_file()
    }

    pub fn write_content(&self, internal_id: &str, bytes: &[u8]) -> io::Result<()> {
        write_atomically(&self.content_path(internal_id), bytes)
    }

    pub fn remove_content(&self, internal_id: &str) -> io::Result<()> {
        remove_optional(&self.content_path(internal_id))
    }

    /// Internal ids of all stored content, sorted.
    pub fn content_ids(&self) -> io::Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(&self.content)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|name| !name.ends_with(".tmp"))
            .map(|name| percent_decode_str(&name).decode_utf8_lossy().into_owned())
            .collect();
        ids.sort();
        Ok(ids)
    }
}
