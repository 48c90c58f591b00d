use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::vocab::{rdf, xsd};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("invalid IRI {0:?}: {1}")]
    InvalidIri(String, &'static str),
    #[error("invalid lexical form {lexical:?} for datatype <{datatype}>")]
    InvalidLexical { lexical: String, datatype: String },
    #[error("language tag {0:?} is only allowed on rdf:langString literals")]
    MisplacedLanguage(String),
    #[error("invalid language tag {0:?}")]
    InvalidLanguage(String),
}

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, TermError> {
        let value = value.into();
        if value.is_empty() {
            return Err(TermError::InvalidIri(value, "empty"));
        }
        if let Some(c) = value
            .chars()
            .find(|c| c.is_whitespace() || c.is_control() || "<>\"{}|^`\\".contains(*c))
        {
            let reason = if c.is_whitespace() {
                "contains whitespace"
            } else {
                "contains a character not allowed in IRIs"
            };
            return Err(TermError::InvalidIri(value, reason));
        }
        if !has_scheme(&value) {
            return Err(TermError::InvalidIri(value, "not absolute (missing scheme)"));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part after the last `#`, `/` or `:`; the whole IRI when that part is empty.
    pub fn local_name(&self) -> &str {
        let s = self.0.as_str();
        let cut = s.rfind(['#', '/', ':']).map(|i| i + 1).unwrap_or(0);
        if cut >= s.len() {
            s
        } else {
            &s[cut..]
        }
    }
}

fn has_scheme(s: &str) -> bool {
    let Some(colon) = s.find(':') else {
        return false;
    };
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Iri {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Iri {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Iri::new(s).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<&str> for Iri {
    type Error = TermError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

/// Value space a datatype IRI belongs to, as far as comparisons are concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatatypeCategory {
    Integer,
    Decimal,
    Double,
    Date,
    DateTime,
    String,
    LangString,
    Boolean,
    Other,
}

impl DatatypeCategory {
    pub fn of(datatype: &str) -> Self {
        let Some(local) = datatype.strip_prefix(xsd::NS) else {
            return if datatype == rdf::LANG_STRING {
                DatatypeCategory::LangString
            } else {
                DatatypeCategory::Other
            };
        };
        match local {
            "integer" | "int" | "long" | "short" | "byte" | "nonNegativeInteger"
            | "positiveInteger" | "negativeInteger" | "nonPositiveInteger" | "unsignedInt"
            | "unsignedLong" | "unsignedShort" | "unsignedByte" => DatatypeCategory::Integer,
            "decimal" => DatatypeCategory::Decimal,
            "double" | "float" => DatatypeCategory::Double,
            "date" => DatatypeCategory::Date,
            "dateTime" => DatatypeCategory::DateTime,
            "string" => DatatypeCategory::String,
            "boolean" => DatatypeCategory::Boolean,
            _ => DatatypeCategory::Other,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            DatatypeCategory::Integer | DatatypeCategory::Decimal | DatatypeCategory::Double
        )
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, DatatypeCategory::Date | DatatypeCategory::DateTime)
    }

    pub fn is_string(self) -> bool {
        matches!(self, DatatypeCategory::String | DatatypeCategory::LangString)
    }
}

/// An RDF literal. Construct with [`Literal::new`] to get lexical validation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    /// A typed literal; numeric, boolean and temporal lexical forms are checked.
    pub fn new(lexical: impl Into<String>, datatype: Iri) -> Result<Self, TermError> {
        let lexical = lexical.into();
        if datatype.as_str() == rdf::LANG_STRING {
            return Err(TermError::InvalidLexical {
                lexical,
                datatype: datatype.0,
            });
        }
        if !lexical_is_valid(&lexical, DatatypeCategory::of(datatype.as_str())) {
            return Err(TermError::InvalidLexical {
                lexical,
                datatype: datatype.0,
            });
        }
        Ok(Literal {
            lexical,
            datatype,
            language: None,
        })
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: xsd::string(),
            language: None,
        }
    }

    pub fn lang_string(lexical: impl Into<String>, tag: impl Into<String>) -> Result<Self, TermError> {
        let tag = tag.into();
        let valid = !tag.is_empty()
            && tag.split('-').all(|part| {
                !part.is_empty() && part.len() <= 8 && part.chars().all(|c| c.is_ascii_alphanumeric())
            })
            && tag.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        if !valid {
            return Err(TermError::InvalidLanguage(tag));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype: rdf::lang_string(),
            language: Some(tag),
        })
    }

    /// Builds a literal from its parts, checking the language/datatype pairing.
    pub fn from_parts(
        lexical: impl Into<String>,
        datatype: Option<Iri>,
        language: Option<String>,
    ) -> Result<Self, TermError> {
        match (datatype, language) {
            (None, None) => Ok(Literal::string(lexical)),
            (Some(dt), None) => Literal::new(lexical, dt),
            (dt, Some(tag)) => {
                if dt.as_ref().is_some_and(|d| d.as_str() != rdf::LANG_STRING) {
                    return Err(TermError::MisplacedLanguage(tag));
                }
                Literal::lang_string(lexical, tag)
            }
        }
    }

    /// Skips lexical validation; used for terms coming back from remote endpoints,
    /// which may hold ill-typed values.
    pub fn new_unchecked(lexical: impl Into<String>, datatype: Iri, language: Option<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype,
            language,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn category(&self) -> DatatypeCategory {
        DatatypeCategory::of(self.datatype.as_str())
    }

    /// Whether the lexical form is in the lexical space of the datatype.
    pub fn is_well_typed(&self) -> bool {
        lexical_is_valid(&self.lexical, self.category())
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.language {
            Some(tag) => write!(f, "{:?}@{}", self.lexical, tag),
            None => write!(f, "{:?}^^{:?}", self.lexical, self.datatype),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct LiteralRepr {
    lexical: String,
    #[serde(default)]
    datatype: Option<Iri>,
    #[serde(default)]
    language: Option<String>,
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LiteralRepr {
            lexical: self.lexical.clone(),
            datatype: Some(self.datatype.clone()),
            language: self.language.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = LiteralRepr::deserialize(deserializer)?;
        Literal::from_parts(repr.lexical, repr.datatype, repr.language).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn lexical_is_valid(lexical: &str, category: DatatypeCategory) -> bool {
    match category {
        DatatypeCategory::Integer => parse_integer_digits(lexical).is_some(),
        DatatypeCategory::Decimal => super::value::Decimal::parse(lexical).is_some(),
        DatatypeCategory::Double => super::value::parse_double(lexical).is_some(),
        DatatypeCategory::Date => super::value::DateValue::parse(lexical).is_some(),
        DatatypeCategory::DateTime => super::value::DateTimeValue::parse(lexical).is_some(),
        DatatypeCategory::Boolean => matches!(lexical, "true" | "false" | "1" | "0"),
        DatatypeCategory::String | DatatypeCategory::LangString | DatatypeCategory::Other => true,
    }
}

fn parse_integer_digits(s: &str) -> Option<&str> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    (!digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())).then_some(digits)
}

/// Object position of a triple: an IRI or a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}
