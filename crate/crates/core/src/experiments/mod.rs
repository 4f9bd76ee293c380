//! Experiment harnesses: synthetic compressed sensing, housing regression
//! and image denoising, plus the shared result table.

pub mod cs;
pub mod denoise;
pub mod housing;
pub mod image;
pub mod methods;
pub mod rng;
pub mod table;

pub use cs::{
    gen_block_instance, gen_cs_instance, nmse, run_block_sweep, run_block_sweep_with, run_cs_sweep,
    run_cs_sweep_with, BlockConfig, BlockStructure, CsConfig, CsInstance,
};
pub use denoise::{denoise_image, run_denoise, vech, Denoiser, PatchModel};
pub use housing::{load_housing, parse_housing, run_housing, run_housing_with, HousingDataset};
pub use image::{median_filter_3x3, mse, psnr, read_pgm, salt_pepper, write_pgm, GrayImage};
pub use methods::{parse_methods, Estimate, Estimator, Layouts, Method, Solver};
pub use table::{ResultRow, ResultTable, CSV_HEADER};
