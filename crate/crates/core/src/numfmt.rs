/// Nine significant digits in exponent form; negative zero prints as zero.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}
