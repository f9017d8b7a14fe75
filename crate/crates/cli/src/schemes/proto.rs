//! Payload encodings for the scheme protocol (all integers little-endian).
//!
//! `WORK` carries a work item as `[start u64][count u64]`. `ADD` carries an
//! addition batch as `[count u32]` followed by length-prefixed serialized
//! polynomials. `RECONF` carries a role assignment for the hierarchy switch.

use crate::schemes::{SchemeError, WorkItem};
use crate::transport::Rank;

pub fn encode_work_item(item: &WorkItem) -> Vec<u8> {
    let mut out = Vec::with_capacity(16);
    out.extend_from_slice(&item.start.to_le_bytes());
    out.extend_from_slice(&item.count.to_le_bytes());
    out
}

pub fn decode_work_item(bytes: &[u8]) -> Result<WorkItem, SchemeError> {
    if bytes.len() != 16 {
        return Err(SchemeError::Protocol(format!(
            "work item payload has {} bytes, expected 16",
            bytes.len()
        )));
    }
    Ok(WorkItem {
        start: u64::from_le_bytes(bytes[0..8].try_into().unwrap()),
        count: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
    })
}

pub fn encode_add_batch(polys: &[Vec<u8>]) -> Vec<u8> {
    let total: usize = polys.iter().map(|p| p.len() + 4).sum();
    let mut out = Vec::with_capacity(4 + total);
    out.extend_from_slice(&(polys.len() as u32).to_le_bytes());
    for p in polys {
        out.extend_from_slice(&(p.len() as u32).to_le_bytes());
        out.extend_from_slice(p);
    }
    out
}

pub fn decode_add_batch(bytes: &[u8]) -> Result<Vec<Vec<u8>>, SchemeError> {
    let err = |msg: &str| SchemeError::Protocol(format!("addition batch: {msg}"));
    if bytes.len() < 4 {
        return Err(err("truncated count"));
    }
    let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let mut out = Vec::with_capacity(count as usize);
    let mut pos = 4;
    for _ in 0..count {
        if pos + 4 > bytes.len() {
            return Err(err("truncated entry length"));
        }
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + len > bytes.len() {
            return Err(err("truncated entry"));
        }
        out.push(bytes[pos..pos + len].to_vec());
        pos += len;
    }
    if pos != bytes.len() {
        return Err(err("trailing bytes"));
    }
    Ok(out)
}

/// Role handed to a worker when the run reshapes into a hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    Foreman {
        fine_granularity: u64,
        pool: Vec<Rank>,
    },
    PoolWorker {
        foreman: Rank,
    },
}

pub fn encode_role(role: &Role) -> Vec<u8> {
    let mut out = Vec::new();
    match role {
        Role::Foreman {
            fine_granularity,
            pool,
        } => {
            out.push(1);
            out.extend_from_slice(&fine_granularity.to_le_bytes());
            out.extend_from_slice(&(pool.len() as u32).to_le_bytes());
            for r in pool {
                out.extend_from_slice(&r.to_le_bytes());
            }
        }
        Role::PoolWorker { foreman } => {
            out.push(2);
            out.extend_from_slice(&foreman.to_le_bytes());
        }
    }
    out
}

pub fn decode_role(bytes: &[u8]) -> Result<Role, SchemeError> {
    let err = |msg: &str| SchemeError::Protocol(format!("role assignment: {msg}"));
    match bytes.first() {
        Some(1) => {
            if bytes.len() < 13 {
                return Err(err("truncated foreman header"));
            }
            let fine_granularity = u64::from_le_bytes(bytes[1..9].try_into().unwrap());
            let n = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
            if bytes.len() != 13 + n * 4 {
                return Err(err("pool list size mismatch"));
            }
            let pool = (0..n)
                .map(|i| u32::from_le_bytes(bytes[13 + i * 4..17 + i * 4].try_into().unwrap()))
                .collect();
            Ok(Role::Foreman {
                fine_granularity,
                pool,
            })
        }
        Some(2) => {
            if bytes.len() != 5 {
                return Err(err("bad pool-worker payload size"));
            }
            Ok(Role::PoolWorker {
                foreman: u32::from_le_bytes(bytes[1..5].try_into().unwrap()),
            })
        }
        _ => Err(err("unknown role kind")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn work_item_round_trip() {
        let item = WorkItem {
            start: 7,
            count: 300,
        };
        assert_eq!(decode_work_item(&encode_work_item(&item)).unwrap(), item);
        assert!(decode_work_item(&[0; 5]).is_err());
    }

    #[test]
    fn add_batch_round_trip() {
        let batch = vec![vec![1, 2, 3], vec![], vec![9; 100]];
        assert_eq!(decode_add_batch(&encode_add_batch(&batch)).unwrap(), batch);
        assert!(decode_add_batch(&[1, 0, 0, 0]).is_err());
    }

    #[test]
    fn role_round_trip() {
        for role in [
            Role::Foreman {
                fine_granularity: 4,
                pool: vec![3, 4, 5],
            },
            Role::Foreman {
                fine_granularity: 1,
                pool: vec![],
            },
            Role::PoolWorker { foreman: 2 },
        ] {
            assert_eq!(decode_role(&encode_role(&role)).unwrap(), role);
        }
    }
}
