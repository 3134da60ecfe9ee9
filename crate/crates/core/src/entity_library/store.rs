use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Entity, EntityLibrary, LibraryError};
use crate::taxonomy::hex_digest;

pub const LIBRARY_FORMAT: &str = "deeper-entity-library";
pub const LIBRARY_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Header {
    format: String,
    version: u32,
    corpus_digest: String,
    taxonomy_digest: String,
    entities: usize,
    checksum: String,
}

impl EntityLibrary {
    /// Header line followed by one JSON entity per line.
    pub fn to_text(&self) -> String {
        let body: String = self
            .entities
            .iter()
            .map(|e| serde_json::to_string(e).expect("entity serialization cannot fail") + "\n")
            .collect();
        let header = Header {
            format: LIBRARY_FORMAT.into(),
            version: LIBRARY_VERSION,
            corpus_digest: self.corpus_digest.clone(),
            taxonomy_digest: self.taxonomy_digest.clone(),
            entities: self.entities.len(),
            checksum: hex_digest(body.as_bytes()),
        };
        serde_json::to_string(&header).expect("header serialization cannot fail") + "\n" + &body
    }

    pub fn from_text(text: &str) -> Result<Self, LibraryError> {
        let (head, body) = text.split_once('\n').unwrap_or((text, ""));
        let header: Header = serde_json::from_str(head).map_err(|e| LibraryError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.format != LIBRARY_FORMAT {
            return Err(LibraryError::Parse {
                line: 1,
                message: format!("unknown format {:?}", header.format),
            });
        }
        if header.version != LIBRARY_VERSION {
            return Err(LibraryError::Version {
                found: header.version,
                expected: LIBRARY_VERSION,
            });
        }
        let actual = hex_digest(body.as_bytes());
        if actual != header.checksum {
            return Err(LibraryError::Checksum {
                expected: header.checksum,
                actual,
            });
        }
        let entities = body
            .lines()
            .enumerate()
            .map(|(n, l)| {
                serde_json::from_str::<Entity>(l).map_err(|e| LibraryError::Parse {
                    line: n + 2,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if entities.len() != header.entities {
            return Err(LibraryError::Invalid(format!(
                "header announces {} entities, found {}",
                header.entities,
                entities.len()
            )));
        }
        let mut lib = EntityLibrary::new(entities)?;
        lib.corpus_digest = header.corpus_digest;
        lib.taxonomy_digest = header.taxonomy_digest;
        Ok(lib)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LibraryError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LibraryError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity_library::{Alias, AliasOrigin};
    use crate::taxonomy::SynsetId;
    use std::collections::BTreeSet;

    fn sample() -> EntityLibrary {
        EntityLibrary::new(vec![Entity {
            entity_id: 0,
            main_name: "Bronisław Komorowski".into(),
            aliases: BTreeSet::from([Alias {
                name: "Komorowski".into(),
                origin: AliasOrigin::Redirect,
            }]),
            description_url: "doc:1".into(),
            source_doc_id: "1".into(),
            synset_ids: BTreeSet::from([SynsetId::from("president")]),
        }])
        .unwrap()
    }

    #[test]
    fn empty_round_trip() {
        let lib = EntityLibrary::default();
        assert_eq!(EntityLibrary::from_text(&lib.to_text()).unwrap(), lib);
    }

    #[test]
    fn round_trip_keeps_index() {
        let lib = sample();
        let back = EntityLibrary::from_text(&lib.to_text()).unwrap();
        assert_eq!(back, lib);
        assert_eq!(back.lookup("Komorowski"), &[0]);
    }

    #[test]
    fn truncation_fails_checksum() {
        let text = sample().to_text();
        let cut = &text[..text.len() - 10];
        assert!(matches!(EntityLibrary::from_text(cut), Err(LibraryError::Checksum { .. })));
    }

    #[test]
    fn version_mismatch() {
        let text = sample().to_text().replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(EntityLibrary::from_text(&text), Err(LibraryError::Version { found: 9, .. })));
    }
}
