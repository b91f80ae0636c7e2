//! Fixed-width bit messages and the per-run transcript with its budget
//! ledger.

use crate::error::{Error, Result};

/// Exactly `l` bits sent by one encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMessage {
    bits: Vec<bool>,
}

impl BitMessage {
    pub fn zeros(l: usize) -> Self {
        Self {
            bits: vec![false; l],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Encode `value` big-endian into `l` bits. `value` must fit.
    pub fn from_value(value: u64, l: usize) -> Self {
        let mut msg = Self::zeros(l);
        msg.write_field(0, l, value);
        msg
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Write `value` big-endian into bits `[start, start + width)`.
    pub fn write_field(&mut self, start: usize, width: usize, value: u64) {
        debug_assert!(width <= 64 && (width == 64 || value < (1u64 << width)));
        for j in 0..width {
            self.bits[start + j] = (value >> (width - 1 - j)) & 1 == 1;
        }
    }

    /// Read the big-endian field at bits `[start, start + width)`.
    pub fn read_field(&self, start: usize, width: usize) -> u64 {
        let mut v = 0u64;
        for j in 0..width {
            v = (v << 1) | u64::from(self.bits[start + j]);
        }
        v
    }

    /// The whole message as a big-endian integer (length <= 64).
    pub fn value(&self) -> u64 {
        self.read_field(0, self.bits.len())
    }

    /// Copy into a message of `l` bits, zero-padded on the right.
    pub fn padded_to(&self, l: usize) -> BitMessage {
        debug_assert!(self.bits.len() <= l);
        let mut out = BitMessage::zeros(l);
        out.bits[..self.bits.len()].copy_from_slice(&self.bits);
        out
    }
}

/// Ordered record of the `m` messages of one protocol run plus the bit
/// ledger used by budget audits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<BitMessage>,
    ledger: Vec<usize>,
    production_order: Vec<usize>,
}

impl Transcript {
    /// Assemble a transcript without validation; audits treat any defect as
    /// data, so tests can build malformed transcripts deliberately.
    pub fn from_parts(
        messages: Vec<BitMessage>,
        ledger: Vec<usize>,
        production_order: Vec<usize>,
    ) -> Self {
        Self {
            messages,
            ledger,
            production_order,
        }
    }

    /// Build a transcript from messages produced in encoder order.
    pub fn from_messages(messages: Vec<BitMessage>) -> Self {
        let ledger = messages.iter().map(BitMessage::len).collect();
        let production_order = (0..messages.len()).collect();
        Self {
            messages,
            ledger,
            production_order,
        }
    }

    pub fn builder(m: usize, l: usize) -> TranscriptBuilder {
        TranscriptBuilder {
            m,
            l,
            slots: vec![None; m],
            order: Vec::with_capacity(m),
        }
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn message(&self, i: usize) -> &BitMessage {
        &self.messages[i]
    }

    pub fn messages(&self) -> &[BitMessage] {
        &self.messages
    }

    pub fn ledger(&self) -> &[usize] {
        &self.ledger
    }

    pub fn production_order(&self) -> &[usize] {
        &self.production_order
    }

    pub fn total_bits(&self) -> usize {
        self.ledger.iter().sum()
    }
}

/// Accumulates messages as encoders produce them, recording the order.
#[derive(Debug)]
pub struct TranscriptBuilder {
    m: usize,
    l: usize,
    slots: Vec<Option<BitMessage>>,
    order: Vec<usize>,
}

impl TranscriptBuilder {
    pub fn push(&mut self, encoder: usize, message: BitMessage) -> Result<()> {
        if encoder >= self.m {
            return Err(Error::EncoderOutOfRange {
                index: encoder,
                m: self.m,
            });
        }
        if self.slots[encoder].is_some() {
            return Err(Error::DuplicateMessage(encoder));
        }
        self.slots[encoder] = Some(message);
        self.order.push(encoder);
        Ok(())
    }

    /// Append a run of messages for encoders `start..start + msgs.len()`,
    /// padding each to the transcript width.
    pub fn push_block(&mut self, start: usize, msgs: Vec<BitMessage>) -> Result<()> {
        for (i, msg) in msgs.into_iter().enumerate() {
            let padded = if msg.len() < self.l {
                msg.padded_to(self.l)
            } else {
                msg
            };
            self.push(start + i, padded)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Transcript> {
        let mut messages = Vec::with_capacity(self.m);
        for (i, slot) in self.slots.into_iter().enumerate() {
            match slot {
                Some(msg) => messages.push(msg),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "encoder {i} produced no message"
                    )))
                }
            }
        }
        let ledger = messages.iter().map(BitMessage::len).collect();
        Ok(Transcript {
            messages,
            ledger,
            production_order: self.order,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let mut msg = BitMessage::zeros(7);
        msg.write_field(1, 3, 5);
        assert_eq!(msg.read_field(1, 3), 5);
        assert_eq!(msg.read_field(0, 1), 0);
        let v = BitMessage::from_value(0b101, 3);
        assert_eq!(v.bits(), &[true, false, true]);
        assert_eq!(v.value(), 5);
    }

    #[test]
    fn builder_tracks_order_and_completeness() {
        let mut b = Transcript::builder(2, 3);
        b.push(1, BitMessage::zeros(3)).unwrap();
        b.push(0, BitMessage::zeros(3)).unwrap();
        let t = b.finish().unwrap();
        assert_eq!(t.production_order(), &[1, 0]);
        assert_eq!(t.total_bits(), 6);

        let mut b = Transcript::builder(2, 3);
        b.push(0, BitMessage::zeros(3)).unwrap();
        assert!(b.push(0, BitMessage::zeros(3)).is_err());
        assert!(b.finish().is_err());
    }
}
