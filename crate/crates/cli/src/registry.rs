//! Decoders by name: builtins for metric checks that need no training, or a
//! path to a saved model.
//!
//! - `identity:D`
//! - `affine:diag:a,b,...` (diagonal linear map)
//! - `torus` / `ground-truth` (the torus decoder of `[dataset]`, or the
//!   default torus when the dataset is not a torus)
//! - anything else is read as a flow checkpoint or MLP decoder file

use std::path::Path;
use std::sync::Arc;

use manimet_core::decoders::{
    load_mlp_decoder, AffineDecoder, Decoder, FlowDecoder, TorusDecoder, MLP_MAGIC,
};
use manimet_core::dgp::{DatasetConfig, TorusDatasetConfig};
use manimet_core::flows::{load_model, FLOW_MAGIC};

use crate::error::CliError;

pub const GROUND_TRUTH: &str = "ground-truth";

pub fn torus_decoder(dataset: Option<&DatasetConfig>) -> Result<TorusDecoder, CliError> {
    let config = match dataset {
        Some(DatasetConfig::Torus(t)) => t.clone(),
        _ => TorusDatasetConfig::default(),
    };
    Ok(config.decoder()?)
}

pub fn resolve_decoder(
    name: &str,
    dataset: Option<&DatasetConfig>,
) -> Result<Arc<dyn Decoder>, CliError> {
    if name == GROUND_TRUTH {
        return match dataset {
            Some(DatasetConfig::Torus(_)) => Ok(Arc::new(torus_decoder(dataset)?)),
            _ => Err(CliError::usage("ground-truth needs a torus [dataset]")),
        };
    }
    if name == "torus" {
        return Ok(Arc::new(torus_decoder(dataset)?));
    }
    if let Some(d) = name.strip_prefix("identity:") {
        let dim: usize = d
            .parse()
            .map_err(|_| CliError::usage(format!("bad dimension in '{name}'")))?;
        if dim == 0 {
            return Err(CliError::usage("identity decoder needs dimension >= 1"));
        }
        return Ok(Arc::new(AffineDecoder::identity(dim).with_name(name)));
    }
    if let Some(list) = name.strip_prefix("affine:diag:") {
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::usage(format!("bad diagonal in '{name}'")))?;
        return Ok(Arc::new(AffineDecoder::diagonal(&values)?.with_name(name)));
    }
    let path = Path::new(name);
    let head = read_head(path)?;
    if head == *FLOW_MAGIC {
        Ok(Arc::new(
            FlowDecoder::new(load_model(path)?).with_name(name),
        ))
    } else if head == *MLP_MAGIC {
        Ok(Arc::new(load_mlp_decoder(path)?.with_name(name)))
    } else {
        Err(CliError::usage(format!(
            "'{name}' is neither a builtin decoder nor a model file"
        )))
    }
}

fn read_head(path: &Path) -> Result<[u8; 8], CliError> {
    use std::io::Read;
    let mut f = std::fs::File::open(path)
        .map_err(|e| CliError::usage(format!("unknown decoder '{}': {e}", path.display())))?;
    let mut head = [0u8; 8];
    f.read_exact(&mut head).map_err(|_| {
        CliError::usage(format!(
            "'{}' is too short to be a model file",
            path.display()
        ))
    })?;
    Ok(head)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let d = resolve_decoder("affine:diag:2,0.5", None).unwrap();
        assert_eq!(d.latent_dim(), 2);
        assert_eq!(d.decode(&[1.0, 1.0]).unwrap(), vec![2.0, 0.5]);
        assert_eq!(resolve_decoder("identity:3", None).unwrap().latent_dim(), 3);
        assert_eq!(resolve_decoder("torus", None).unwrap().latent_dim(), 20);
    }

    #[test]
    fn bad_names_are_usage_errors() {
        for name in [
            "identity:x",
            "affine:diag:1,a",
            "no/such/file.flow",
            "ground-truth",
        ] {
            assert_eq!(
                resolve_decoder(name, None).err().unwrap().exit_code(),
                1,
                "{name}"
            );
        }
    }
}
