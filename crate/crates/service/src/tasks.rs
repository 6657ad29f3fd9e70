use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub const DEFAULT_LEASE: Duration = Duration::from_secs(600);

const IMAGE_TYPES: [(&str, &str); 6] = [
    ("jpg", "image/jpeg"),
    ("jpeg", "image/jpeg"),
    ("png", "image/png"),
    ("webp", "image/webp"),
    ("gif", "image/gif"),
    ("bmp", "image/bmp"),
];

/// MIME type for a supported image file name.
pub fn content_type(name: &str) -> Option<&'static str> {
    let ext = Path::new(name).extension()?.to_str()?.to_ascii_lowercase();
    IMAGE_TYPES.iter().find(|(e, _)| *e == ext).map(|(_, t)| *t)
}

/// Images in `dir` (not recursive), keyed by file name.
pub fn scan_images(dir: &Path) -> std::io::Result<BTreeMap<String, PathBuf>> {
    let mut images = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        if let Some(name) = entry.file_name().to_str() {
            if content_type(name).is_some() {
                images.insert(name.to_string(), entry.path());
            }
        }
    }
    Ok(images)
}

/// Pending images in id order, each handed out at most once per lease.
#[derive(Debug)]
pub struct TaskQueue {
    pending: Vec<String>,
    leases: HashMap<String, Instant>,
    lease: Duration,
}

impl TaskQueue {
    pub fn new(pending: impl IntoIterator<Item = String>, lease: Duration) -> Self {
        let mut pending: Vec<String> = pending.into_iter().collect();
        pending.sort();
        pending.dedup();
        Self {
            pending,
            leases: HashMap::new(),
            lease,
        }
    }

    /// Lease the first pending image whose lease is absent or expired.
    pub fn next(&mut self, now: Instant) -> Option<String> {
        let lease = self.lease;
        let id = self.pending.iter().find(|id| {
            self.leases
                .get(id.as_str())
                .is_none_or(|&t| now.duration_since(t) >= lease)
        })?;
        self.leases.insert(id.clone(), now);
        Some(id.clone())
    }

    /// Drop a finished image from the queue.
    pub fn complete(&mut self, image_id: &str) {
        self.pending.retain(|p| p != image_id);
        self.leases.remove(image_id);
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn queue(ids: &[&str]) -> TaskQueue {
        TaskQueue::new(ids.iter().map(|s| s.to_string()), Duration::from_secs(600))
    }

    #[test]
    fn leases_are_exclusive_until_expiry() {
        let t0 = Instant::now();
        let mut q = queue(&["b.png", "a.jpg"]);
        assert_eq!(q.next(t0).as_deref(), Some("a.jpg"));
        assert_eq!(q.next(t0).as_deref(), Some("b.png"));
        assert_eq!(q.next(t0 + Duration::from_secs(599)), None);
        assert_eq!(q.next(t0 + Duration::from_secs(600)).as_deref(), Some("a.jpg"));
    }

    #[test]
    fn completed_images_leave_the_queue() {
        let t0 = Instant::now();
        let mut q = queue(&["a.jpg", "b.png"]);
        let first = q.next(t0).unwrap();
        q.complete(&first);
        assert_eq!(q.pending(), 1);
        assert_eq!(q.next(t0 + Duration::from_secs(3600)).as_deref(), Some("b.png"));
        q.complete("b.png");
        assert_eq!(q.next(t0 + Duration::from_secs(7200)), None);
    }

    #[test]
    fn content_types_follow_extension() {
        assert_eq!(content_type("x.JPG"), Some("image/jpeg"));
        assert_eq!(content_type("x.png"), Some("image/png"));
        assert_eq!(content_type("notes.txt"), None);
        assert_eq!(content_type("noext"), None);
    }
}
