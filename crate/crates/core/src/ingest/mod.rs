//! Reading, validating and joining external datasets onto clusters.

mod aggregate;
mod records;
mod tables;
mod wards;

pub use aggregate::{aggregate_to_clusters, land_price_by_cluster, KindTotals, PopulationTotals};
pub use records::{
    parse_cards, parse_land_prices, parse_population, parse_shops, read_cards, read_land_prices,
    read_population, read_shops, write_cards, write_land_prices, write_population, write_rejects,
    write_shops, CardRecord, LandPriceKey, LandPriceRecord, Parsed, PopulationCell, PopulationKind,
    Reject, CARD_CELL_M, CARD_HEADER, LAND_PRICE_CELL_HEADER, LAND_PRICE_CLUSTER_HEADER,
    MAX_REJECT_FRACTION, POPULATION_HEADER, SHOPS_HEADER,
};
pub use tables::{
    build_regression_tables, product_industries, write_table, BuildReport, RegressionInputs,
    RegressionTables, LAND_PRICE_SCALE, MAX_JOIN_MISMATCH, POPULATION_SCALE,
};
pub use wards::{WardMap, WARD_GRID};
