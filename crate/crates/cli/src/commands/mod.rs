pub mod calibrate;
pub mod evaluate;
pub mod gen_data;
pub mod select;
pub mod sweep;
