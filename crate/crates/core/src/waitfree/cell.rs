use std::marker::PhantomData;
use std::ops::Deref;
use std::ptr;
use std::sync::atomic::{AtomicPtr, Ordering};

struct Record<T> {
    value: T,
    /// The record this one replaced. Owned by this record once installed.
    replaced: *mut Record<T>,
}

/// A slot holding an immutable record, updated by replacing the whole
/// record with compare-and-swap on its address.
///
/// Replaced records are kept alive, chained behind the current one, until
/// the cell is dropped. Readers can therefore hold a [`Snapshot`] for as
/// long as they borrow the cell, and since no address is reused while the
/// cell lives, a successful swap proves nobody installed anything in
/// between.
pub struct VersionedCell<T> {
    head: AtomicPtr<Record<T>>,
}

unsafe impl<T: Send + Sync> Send for VersionedCell<T> {}
unsafe impl<T: Send + Sync> Sync for VersionedCell<T> {}

/// A record observed in a [`VersionedCell`].
pub struct Snapshot<'a, T> {
    ptr: *mut Record<T>,
    _cell: PhantomData<&'a VersionedCell<T>>,
}

// SAFETY: a snapshot only hands out shared references to the record.
unsafe impl<T: Sync> Send for Snapshot<'_, T> {}
unsafe impl<T: Sync> Sync for Snapshot<'_, T> {}

impl<T> Clone for Snapshot<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for Snapshot<'_, T> {}

impl<T> Deref for Snapshot<'_, T> {
    type Target = T;

    fn deref(&self) -> &T {
        // SAFETY: records reachable from a cell are freed only when the cell
        // is dropped, which cannot happen while this borrow is alive.
        unsafe { &(*self.ptr).value }
    }
}

impl<T> VersionedCell<T> {
    pub fn new(value: T) -> Self {
        let rec = Box::into_raw(Box::new(Record {
            value,
            replaced: ptr::null_mut(),
        }));
        VersionedCell {
            head: AtomicPtr::new(rec),
        }
    }

    #[inline]
    pub fn load(&self) -> Snapshot<'_, T> {
        Snapshot {
            ptr: self.head.load(Ordering::Acquire),
            _cell: PhantomData,
        }
    }

    /// Installs `value` iff the cell still holds the record `expected`.
    /// On failure the value is handed back.
    pub fn replace_if_unchanged(&self, expected: Snapshot<'_, T>, value: T) -> Result<(), T> {
        let rec = Box::into_raw(Box::new(Record {
            value,
            replaced: expected.ptr,
        }));
        match self
            .head
            .compare_exchange(expected.ptr, rec, Ordering::AcqRel, Ordering::Acquire)
        {
            Ok(_) => Ok(()),
            Err(_) => {
                // SAFETY: `rec` was never published.
                let rec = unsafe { Box::from_raw(rec) };
                Err(rec.value)
            }
        }
    }

    /// Number of records ever installed, including the initial one.
    pub fn history_len(&mut self) -> usize {
        let mut len = 0;
        let mut p = *self.head.get_mut();
        while !p.is_null() {
            len += 1;
            // SAFETY: exclusive access; the chain is intact.
            p = unsafe { (*p).replaced };
        }
        len
    }
}

impl<T> Drop for VersionedCell<T> {
    fn drop(&mut self) {
        let mut p = *self.head.get_mut();
        while !p.is_null() {
            // SAFETY: every record in the chain was installed exactly once and
            // is owned by its successor (or the cell, for the head).
            let rec = unsafe { Box::from_raw(p) };
            p = rec.replaced;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn replace_and_stale() {
        let mut cell = VersionedCell::new((0u64, 1.0f64));
        let snap = cell.load();
        assert_eq!(*snap, (0, 1.0));
        assert!(cell.replace_if_unchanged(snap, (1, 2.0)).is_ok());
        assert_eq!(*cell.load(), (1, 2.0));
        // The old snapshot is still readable but no longer current.
        assert_eq!(*snap, (0, 1.0));
        assert_eq!(cell.replace_if_unchanged(snap, (1, 3.0)), Err((1, 3.0)));
        assert_eq!(*cell.load(), (1, 2.0));
        assert_eq!(cell.history_len(), 2);
    }

    #[test]
    fn racing_installers_one_winner() {
        for _ in 0..200 {
            let cell = VersionedCell::new(0u64);
            let wins = AtomicUsize::new(0);
            let snap = cell.load();
            std::thread::scope(|s| {
                for i in 1..=4u64 {
                    let (cell, wins) = (&cell, &wins);
                    s.spawn(move || {
                        if cell.replace_if_unchanged(snap, i).is_ok() {
                            wins.fetch_add(1, Ordering::Relaxed);
                        }
                    });
                }
            });
            assert_eq!(wins.load(Ordering::Relaxed), 1);
            assert_ne!(*cell.load(), 0);
        }
    }

    #[test]
    fn drops_whole_history() {
        struct Counted<'a>(&'a AtomicUsize);
        impl Drop for Counted<'_> {
            fn drop(&mut self) {
                self.0.fetch_add(1, Ordering::Relaxed);
            }
        }
        let drops = AtomicUsize::new(0);
        {
            let cell = VersionedCell::new(Counted(&drops));
            for _ in 0..5 {
                let snap = cell.load();
                assert!(cell.replace_if_unchanged(snap, Counted(&drops)).is_ok());
            }
            let stale = cell.load();
            let snap = cell.load();
            cell.replace_if_unchanged(snap, Counted(&drops))
                .ok()
                .unwrap();
            // A failed install hands the value back; dropping it counts once.
            drop(
                cell.replace_if_unchanged(stale, Counted(&drops))
                    .unwrap_err(),
            );
            assert_eq!(drops.load(Ordering::Relaxed), 1);
        }
        assert_eq!(drops.load(Ordering::Relaxed), 8);
    }
}
