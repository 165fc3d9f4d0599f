use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gf256;
use super::LtlError;
use crate::domain::RngStream;

/// Largest block the decoder accepts.
pub const MAX_K: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceBlock {
    pub block_id: u64,
    pub k: u32,
    pub symbol_size: usize,
    /// `k * symbol_size` bytes, zero-padded.
    pub payload: Vec<u8>,
}

impl SourceBlock {
    /// Splits `data` into `symbol_size` pieces, padding the last with zeros.
    pub fn from_bytes(block_id: u64, data: &[u8], symbol_size: usize) -> Result<Self, LtlError> {
        if symbol_size == 0 || data.is_empty() {
            return Err(LtlError::Invalid("block needs data and a positive symbol size".into()));
        }
        let k = data.len().div_ceil(symbol_size);
        if k > MAX_K as usize {
            return Err(LtlError::Invalid(format!("K = {k} exceeds {MAX_K}")));
        }
        let mut payload = data.to_vec();
        payload.resize(k * symbol_size, 0);
        Ok(Self { block_id, k: k as u32, symbol_size, payload })
    }

    pub fn symbol(&self, i: usize) -> &[u8] {
        &self.payload[i * self.symbol_size..(i + 1) * self.symbol_size]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Systematic,
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSymbol {
    pub block_id: u64,
    pub symbol_id: u32,
    pub kind: SymbolKind,
    pub coefficients: Vec<u8>,
    pub data: Vec<u8>,
}

impl EncodedSymbol {
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }
}

/// Coefficients of repair symbol `symbol_id`: a uniformly random nonzero
/// vector that depends only on `(seed, block_id, symbol_id)`.
pub fn repair_coefficients(seed: u64, block_id: u64, symbol_id: u32, k: usize) -> Vec<u8> {
    let mut r = RngStream::new(seed, block_id).substream(symbol_id as u64).rng();
    loop {
        let mut c = vec![0u8; k];
        r.fill(&mut c[..]);
        if c.iter().any(|&x| x != 0) {
            return c;
        }
    }
}

/// Symbol `symbol_id` of the block's stream: ids below K are the source
/// symbols themselves, later ids are repair combinations.
pub fn encode_symbol(block: &SourceBlock, symbol_id: u32, seed: u64) -> EncodedSymbol {
    let k = block.k as usize;
    if symbol_id < block.k {
        let mut coefficients = vec![0u8; k];
        coefficients[symbol_id as usize] = 1;
        return EncodedSymbol {
            block_id: block.block_id,
            symbol_id,
            kind: SymbolKind::Systematic,
            coefficients,
            data: block.symbol(symbol_id as usize).to_vec(),
        };
    }
    let coefficients = repair_coefficients(seed, block.block_id, symbol_id, k);
    let mut data = vec![0u8; block.symbol_size];
    for (i, &c) in coefficients.iter().enumerate() {
        gf256::axpy(&mut data, c, block.symbol(i));
    }
    EncodedSymbol { block_id: block.block_id, symbol_id, kind: SymbolKind::Repair, coefficients, data }
}

/// The first `n` symbols of the block's stream.
pub fn encode_block(block: &SourceBlock, n: u32, seed: u64) -> Result<Vec<EncodedSymbol>, LtlError> {
    if n < block.k {
        return Err(LtlError::Invalid(format!("n = {n} below K = {}", block.k)));
    }
    Ok((0..n).map(|i| encode_symbol(block, i, seed)).collect())
}

/// Row-reduces `rows` (each `width` wide) in place; returns the indices of
/// a maximal independent subset in insertion order.
fn independent_rows(rows: &[Vec<u8>], width: usize) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut chosen = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        if basis.len() == width {
            break;
        }
        let mut v = row.clone();
        for (p, b) in &basis {
            let c = v[*p];
            if c != 0 {
                gf256::axpy(&mut v, c, b);
            }
        }
        if let Some(p) = v.iter().position(|&x| x != 0) {
            let s = gf256::inv(v[p]);
            gf256::scale(&mut v, s);
            basis.push((p, v));
            chosen.push(idx);
        }
    }
    chosen
}

/// Incremental receiver for one block. Source symbols fill their slot
/// directly; repair symbols are only reduced when [`BlockDecoder::rank`] or
/// [`BlockDecoder::decode`] asks, and then only over the missing columns.
#[derive(Debug, Clone)]
pub struct BlockDecoder {
    block_id: u64,
    k: usize,
    symbol_size: usize,
    sys: Vec<Option<Vec<u8>>>,
    sys_count: usize,
    repair: Vec<(Vec<u8>, Vec<u8>)>,
    repair_ids: BTreeSet<u32>,
}

impl BlockDecoder {
    pub fn new(block_id: u64, k: usize, symbol_size: usize) -> Self {
        Self {
            block_id,
            k,
            symbol_size,
            sys: vec![None; k],
            sys_count: 0,
            repair: Vec::new(),
            repair_ids: BTreeSet::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source_received(&self) -> usize {
        self.sys_count
    }

    pub fn push(&mut self, s: &EncodedSymbol) -> Result<(), LtlError> {
        if s.block_id != self.block_id || s.coefficients.len() != self.k || s.data.len() != self.symbol_size {
            return Err(LtlError::Inconsistent(format!(
                "symbol {} of block {} (K {}, {} bytes) does not match block {} (K {}, {} bytes)",
                s.symbol_id,
                s.block_id,
                s.coefficients.len(),
                s.data.len(),
                self.block_id,
                self.k,
                self.symbol_size
            )));
        }
        match s.kind {
            SymbolKind::Systematic => {
                let i = s.symbol_id as usize;
                if i >= self.k || s.coefficients.iter().enumerate().any(|(j, &c)| c != u8::from(j == i)) {
                    return Err(LtlError::Inconsistent(format!("systematic symbol {i} is not a unit vector")));
                }
                if self.sys[i].is_none() {
                    self.sys[i] = Some(s.data.clone());
                    self.sys_count += 1;
                }
            }
            SymbolKind::Repair => {
                if self.repair_ids.insert(s.symbol_id) {
                    self.repair.push((s.coefficients.clone(), s.data.clone()));
                }
            }
        }
        Ok(())
    }

    fn missing(&self) -> Vec<usize> {
        (0..self.k).filter(|&i| self.sys[i].is_none()).collect()
    }

    fn restricted(&self, missing: &[usize]) -> Vec<Vec<u8>> {
        self.repair.iter().map(|(c, _)| missing.iter().map(|&j| c[j]).collect()).collect()
    }

    pub fn rank(&self) -> usize {
        let missing = self.missing();
        if missing.is_empty() || self.repair.is_empty() {
            return self.sys_count;
        }
        self.sys_count + independent_rows(&self.restricted(&missing), missing.len()).len()
    }

    pub fn is_decodable(&self) -> bool {
        self.sys_count == self.k || (self.sys_count + self.repair.len() >= self.k && self.rank() == self.k)
    }

    /// Returns the padded payload, or `NeedMore` with the rank deficit.
    pub fn decode(&self) -> Result<Vec<u8>, LtlError> {
        let missing = self.missing();
        let rows = self.restricted(&missing);
        let chosen = independent_rows(&rows, missing.len());
        if chosen.len() < missing.len() {
            return Err(LtlError::NeedMore(missing.len() - chosen.len()));
        }
        let m = missing.len();
        // Augmented system [A | b] over the missing columns only.
        let mut aug: Vec<(Vec<u8>, Vec<u8>)> = chosen
            .iter()
            .map(|&r| {
                let (coef, data) = &self.repair[r];
                let mut b = data.clone();
                for (j, sym) in self.sys.iter().enumerate() {
                    if let Some(sym) = sym {
                        gf256::axpy(&mut b, coef[j], sym);
                    }
                }
                (rows[r].clone(), b)
            })
            .collect();
        for col in 0..m {
            let piv = (col..m).find(|&r| aug[r].0[col] != 0).expect("independent rows are full rank");
            aug.swap(col, piv);
            let s = gf256::inv(aug[col].0[col]);
            gf256::scale(&mut aug[col].0, s);
            gf256::scale(&mut aug[col].1, s);
            let (a, b) = (aug[col].0.clone(), aug[col].1.clone());
            for (r, row) in aug.iter_mut().enumerate() {
                let c = row.0[col];
                if r != col && c != 0 {
                    gf256::axpy(&mut row.0, c, &a);
                    gf256::axpy(&mut row.1, c, &b);
                }
            }
        }
        let mut out = vec![0u8; self.k * self.symbol_size];
        for (j, sym) in self.sys.iter().enumerate() {
            if let Some(sym) = sym {
                out[j * self.symbol_size..(j + 1) * self.symbol_size].copy_from_slice(sym);
            }
        }
        for (slot, &j) in missing.iter().enumerate() {
            out[j * self.symbol_size..(j + 1) * self.symbol_size].copy_from_slice(&aug[slot].1);
        }
        Ok(out)
    }
}

/// Decodes a block from any subset of its symbols.
pub fn decode_block(symbols: &[EncodedSymbol]) -> Result<Vec<u8>, LtlError> {
    let first = symbols.first().ok_or_else(|| LtlError::Inconsistent("no symbols".into()))?;
    let mut d = BlockDecoder::new(first.block_id, first.k(), first.data.len());
    for s in symbols {
        d.push(s)?;
    }
    d.decode()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(k: usize, size: usize, seed: u64) -> SourceBlock {
        let mut r = RngStream::new(seed, 0).rng();
        let data: Vec<u8> = (0..k * size).map(|_| r.random()).collect();
        SourceBlock::from_bytes(seed, &data, size).unwrap()
    }

    #[test]
    fn systematic_prefix_is_payload() {
        let b = block(8, 16, 1);
        let s = encode_block(&b, 8, 5).unwrap();
        let joined: Vec<u8> = s.iter().flat_map(|x| x.data.clone()).collect();
        assert_eq!(joined, b.payload);
        assert_eq!(decode_block(&s).unwrap(), b.payload);
    }

    #[test]
    fn repair_only_decode() {
        let b = block(16, 32, 2);
        let s = encode_block(&b, 16 + 40, 9).unwrap();
        assert_eq!(decode_block(&s[16..]).unwrap(), b.payload);
    }

    #[test]
    fn one_short_needs_one() {
        let b = block(10, 4, 3);
        let s = encode_block(&b, 10, 1).unwrap();
        assert!(matches!(decode_block(&s[..9]), Err(LtlError::NeedMore(1))));
    }

    #[test]
    fn prefix_property() {
        let b = block(16, 8, 4);
        let a = encode_block(&b, 64, 77).unwrap();
        let c = encode_block(&b, 128, 77).unwrap();
        assert_eq!(a[..], c[..64]);
    }

    #[test]
    fn padding_and_mixed_block_rejected() {
        let b = SourceBlock::from_bytes(0, &[1, 2, 3], 2).unwrap();
        assert_eq!(b.payload, vec![1, 2, 3, 0]);
        let other = SourceBlock::from_bytes(1, &[1, 2, 3], 2).unwrap();
        let mut s = encode_block(&b, 2, 0).unwrap();
        s.push(encode_symbol(&other, 0, 0));
        assert!(matches!(decode_block(&s), Err(LtlError::Inconsistent(_))));
    }
}
