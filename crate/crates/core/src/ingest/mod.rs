//! Source data: parsing monthly tables, building rates, splicing sources,
//! and the optional remote refresh.

pub mod dataset;
pub mod fetch;
pub mod table;
pub mod transform;

pub use dataset::{BuildOptions, DataManifest, Dataset, Scope, SourceFiles};
pub use fetch::{FetchConfig, RemoteFetcher};
pub use table::{parse_monthly_table, parse_table, serialize_monthly_table};
pub use transform::{rescale_to_anchor, shift_forward, splice, unemployment_rate, vacancy_rate_jolts};
