//! JSON problem documents with CSV-embedded matrices.

use super::{CompositeBlock, ProblemInstance, ProxCatalog, ProxTerm, SaddleReference, SmoothTerm};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    csv: String,
}

impl MatrixDoc {
    fn from_matrix<S: Scalar>(m: &Matrix<S>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            csv: m.to_csv(),
        }
    }

    fn to_matrix<S: Scalar>(&self) -> Result<Matrix<S>> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(Matrix::zeros(self.rows, self.cols));
        }
        let m = Matrix::from_csv(&self.csv)?;
        check_dim("matrix rows", self.rows, m.rows())?;
        check_dim("matrix columns", self.cols, m.cols())?;
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
enum SmoothDoc<S> {
    Zero,
    LeastSquares {
        matrix: MatrixDoc,
        target: Vec<S>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<S>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct BlockDoc<S> {
    dim: usize,
    prox: ProxCatalog<S>,
    smooth: SmoothDoc<S>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct ProblemDoc<S> {
    x_block: BlockDoc<S>,
    y_block: BlockDoc<S>,
    a: MatrixDoc,
    b: MatrixDoc,
    rhs: Vec<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<SaddleReference<S>>,
}

fn block_doc<S: Scalar>(block: &CompositeBlock<S>) -> Result<BlockDoc<S>> {
    let prox = block
        .prox_term
        .catalog()
        .cloned()
        .ok_or_else(|| Error::Capability("custom prox terms are not serializable".into()))?;
    let smooth = if block.smooth_term.is_zero() {
        SmoothDoc::Zero
    } else if let Some((c, d)) = block.smooth_term.least_squares_data() {
        SmoothDoc::LeastSquares {
            matrix: MatrixDoc::from_matrix(c),
            target: d.as_slice().to_vec(),
            lipschitz: Some(block.smooth_term.lipschitz()),
        }
    } else {
        return Err(Error::Capability(
            "custom smooth terms are not serializable".into(),
        ));
    };
    Ok(BlockDoc {
        dim: block.dim,
        prox,
        smooth,
    })
}

fn block_from_doc<S: Scalar>(doc: BlockDoc<S>) -> Result<CompositeBlock<S>> {
    let prox = ProxTerm::from_catalog(doc.prox)?;
    let smooth = match doc.smooth {
        SmoothDoc::Zero => SmoothTerm::zero(),
        SmoothDoc::LeastSquares {
            matrix,
            target,
            lipschitz,
        } => {
            let c = matrix.to_matrix()?;
            let d = Vector::new(target)?;
            match lipschitz {
                Some(l) => SmoothTerm::least_squares_with_lipschitz(c, d, l)?,
                None => SmoothTerm::least_squares(c, d)?,
            }
        }
    };
    CompositeBlock::new(doc.dim, prox, smooth)
}

/// Serializes an instance (and optional reference) to the JSON document format.
pub fn problem_to_json<S: Scalar>(
    inst: &ProblemInstance<S>,
    reference: Option<&SaddleReference<S>>,
) -> Result<String> {
    let doc = ProblemDoc {
        x_block: block_doc(inst.x_block())?,
        y_block: block_doc(inst.y_block())?,
        a: MatrixDoc::from_matrix(inst.a()),
        b: MatrixDoc::from_matrix(inst.b()),
        rhs: inst.rhs().as_slice().to_vec(),
        reference: reference.cloned(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses the JSON document format.
pub fn problem_from_json<S: Scalar>(
    text: &str,
) -> Result<(ProblemInstance<S>, Option<SaddleReference<S>>)> {
    let doc: ProblemDoc<S> = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let inst = ProblemInstance::new(
        block_from_doc(doc.x_block)?,
        block_from_doc(doc.y_block)?,
        doc.a.to_matrix()?,
        doc.b.to_matrix()?,
        Vector::new(doc.rhs)?,
    )?;
    if let Some(r) = &doc.reference {
        r.check_dims(&inst)?;
    }
    Ok((inst, doc.reference))
}
