use serde::{Deserialize, Serialize};

/// Stemmer language. `Suffixes` is a plain longest-suffix stripper used for
/// small test languages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StemLanguage {
    #[default]
    German,
    English,
    Suffixes(Vec<String>),
}

pub(crate) enum Stemmer {
    Snowball(rust_stemmers::Stemmer),
    Suffixes(Vec<String>),
}

impl Stemmer {
    pub(crate) fn new(lang: &StemLanguage) -> Stemmer {
        match lang {
            StemLanguage::German => Stemmer::Snowball(rust_stemmers::Stemmer::create(
                rust_stemmers::Algorithm::German,
            )),
            StemLanguage::English => Stemmer::Snowball(rust_stemmers::Stemmer::create(
                rust_stemmers::Algorithm::English,
            )),
            StemLanguage::Suffixes(list) => {
                let mut list = list.clone();
                list.sort_by_key(|s| std::cmp::Reverse(s.chars().count()));
                Stemmer::Suffixes(list)
            }
        }
    }

    pub(crate) fn stem(&self, token: &str) -> String {
        match self {
            Stemmer::Snowball(s) => s.stem(token).into_owned(),
            Stemmer::Suffixes(list) => {
                for suffix in list {
                    // never strip a token down to nothing
                    if token.len() > suffix.len() && token.ends_with(suffix.as_str()) {
                        return token[..token.len() - suffix.len()].to_string();
                    }
                }
                token.to_string()
            }
        }
    }
}
