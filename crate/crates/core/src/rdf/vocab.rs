//! Well-known vocabulary IRIs.

use super::term::Iri;

fn iri(s: &str) -> Iri {
    Iri::new(s).expect("vocabulary IRIs are valid")
}

pub mod rdf {
    pub const NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
    pub const LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

    pub fn type_() -> super::Iri {
        super::iri(TYPE)
    }

    pub fn lang_string() -> super::Iri {
        super::iri(LANG_STRING)
    }
}

pub mod rdfs {
    pub const NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
    pub const SUB_CLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
    pub const RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
    pub const LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const LITERAL: &str = "http://www.w3.org/2000/01/rdf-schema#Literal";

    pub fn label() -> super::Iri {
        super::iri(LABEL)
    }

    pub fn sub_class_of() -> super::Iri {
        super::iri(SUB_CLASS_OF)
    }
}

pub mod owl {
    pub const CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    pub const THING: &str = "http://www.w3.org/2002/07/owl#Thing";
    pub const OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";

    pub fn thing() -> super::Iri {
        super::iri(THING)
    }
}

pub mod xsd {
    pub const NS: &str = "http://www.w3.org/2001/XMLSchema#";

    pub fn string() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#string")
    }
    pub fn integer() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#integer")
    }
    pub fn decimal() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#decimal")
    }
    pub fn double() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#double")
    }
    pub fn boolean() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#boolean")
    }
    pub fn date() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#date")
    }
    pub fn date_time() -> super::Iri {
        super::iri("http://www.w3.org/2001/XMLSchema#dateTime")
    }
}
