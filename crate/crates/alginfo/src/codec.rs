//! Self-delimiting string encodings: `<x> = 1^|x| 0 x` and the pairing
//! `<x,y> = <x><y>`.

use thiserror::Error;

use crate::bits::Bits;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("truncated self-delimiting block: unary run of {expected} needs {expected} payload bits, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unterminated unary length prefix")]
    UnterminatedUnary,
    #[error("trailing bits after a complete block")]
    TrailingBits,
}

/// `1^|x| 0 x`.
pub fn encode_self_delimiting(x: &Bits) -> Bits {
    let mut out = Bits::ones(x.len());
    out.push(false);
    out.extend_from(x);
    out
}

fn decode_block(input: &Bits, start: usize) -> Result<(Bits, usize), CodecError> {
    let mut i = start;
    let mut run = 0usize;
    loop {
        match input.get(i) {
            None => return Err(CodecError::UnterminatedUnary),
            Some(true) => {
                run += 1;
                i += 1;
            }
            Some(false) => {
                i += 1;
                break;
            }
        }
    }
    if i + run > input.len() {
        return Err(CodecError::Truncated {
            expected: run,
            found: input.len() - i,
        });
    }
    Ok((input.slice(i, i + run), i + run))
}

pub fn decode_self_delimiting(input: &Bits) -> Result<Bits, CodecError> {
    let (x, end) = decode_block(input, 0)?;
    if end != input.len() {
        return Err(CodecError::TrailingBits);
    }
    Ok(x)
}

/// `<x><y>`.
pub fn pair_encode(x: &Bits, y: &Bits) -> Bits {
    encode_self_delimiting(x).concat(&encode_self_delimiting(y))
}

pub fn pair_decode(input: &Bits) -> Result<(Bits, Bits), CodecError> {
    let (x, mid) = decode_block(input, 0)?;
    let (y, end) = decode_block(input, mid)?;
    if end != input.len() {
        return Err(CodecError::TrailingBits);
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_self_delimiting(&bits("01")).to_string(), "11001");
        assert_eq!(encode_self_delimiting(&bits("")).to_string(), "0");
        assert_eq!(pair_encode(&bits(""), &bits("")).to_string(), "00");
    }

    #[test]
    fn decode_rejects_malformed() {
        assert_eq!(
            decode_self_delimiting(&bits("11")),
            Err(CodecError::UnterminatedUnary)
        );
        assert_eq!(
            decode_self_delimiting(&bits("1101")),
            Err(CodecError::Truncated { expected: 2, found: 1 })
        );
        assert_eq!(
            decode_self_delimiting(&bits("011")),
            Err(CodecError::TrailingBits)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn pair_round_trip(
            x in proptest::collection::vec(any::<bool>(), 0..24),
            y in proptest::collection::vec(any::<bool>(), 0..24),
        ) {
            let (x, y) = (Bits::from_bools(x), Bits::from_bools(y));
            let (gx, gy) = pair_decode(&pair_encode(&x, &y)).unwrap();
            prop_assert_eq!(gx, x);
            prop_assert_eq!(gy, y);
        }

        #[test]
        fn encode_round_trip(x in proptest::collection::vec(any::<bool>(), 0..40)) {
            let x = Bits::from_bools(x);
            prop_assert_eq!(decode_self_delimiting(&encode_self_delimiting(&x)).unwrap(), x);
        }
    }
}
