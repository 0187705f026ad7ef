//! Browser bindings: the capacity curve, parameter derivation, and a single
//! small block driven round by round.

use wasm_bindgen::prelude::*;

use womkit_core::capacity::{self, WomParams};
use womkit_core::full_codec::{self, FullParams, Session};
use womkit_core::selftest;

/// `samples + 1` values of the binary entropy on `[0, 1]`.
#[wasm_bindgen]
pub fn entropy_curve(samples: u32) -> Vec<f64> {
    let samples = samples.max(1);
    (0..=samples).map(|i| capacity::entropy(i as f64 / samples as f64).unwrap_or(0.0)).collect()
}

fn optimum_text(t: u32) -> Result<String, String> {
    let (rates, p) = capacity::optimal_point(t).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for (j, (r, w)) in rates.rates().iter().zip(p.entries()).enumerate() {
        out += &format!("R{}={r:.6} p{}={w}\n", j + 1, j + 1);
    }
    out += &format!("sum_rate={:.6}\nlog2(t+1)={:.6}\n", rates.sum(), ((t + 1) as f64).log2());
    Ok(out)
}

/// Sum-rate optimal point for `t` writes, one `key=value` line per round.
#[wasm_bindgen]
pub fn optimal_point(t: u32) -> Result<String, JsError> {
    optimum_text(t).map_err(|e| JsError::new(&e))
}

fn params_text(t: u32, epsilon: f64) -> Result<String, String> {
    let (rates, p) = capacity::optimal_point(t).map_err(|e| e.to_string())?;
    let params = capacity::derive_parameters(epsilon, t, &rates, &p).map_err(|e| e.to_string())?;
    let k: Vec<String> = params.k().iter().map(u32::to_string).collect();
    Ok(format!(
        "c={}\nn={}\nl={}\nm={}\nk={}\nN0={}\nachieved_rate={:.6}\ntarget_rate={:.6}\nscale={}\n",
        params.c().unwrap_or(0),
        params.n(),
        params.l(),
        params.m(),
        k.join(","),
        params.n0(),
        capacity::achieved_rate(&params),
        rates.sum() - epsilon,
        if params.desk_executable() { "desk" } else { "analysis" },
    ))
}

/// Block parameters derived for gap `epsilon` at the optimal point.
#[wasm_bindgen]
pub fn derive_params(t: u32, epsilon: f64) -> Result<String, JsError> {
    params_text(t, epsilon).map_err(|e| JsError::new(&e))
}

/// One basic block small enough to draw cell by cell.
#[wasm_bindgen]
pub struct BlockDemo {
    session: Session,
}

impl BlockDemo {
    fn build(t: u32) -> Result<BlockDemo, String> {
        let params: WomParams = match t {
            2 => selftest::two_write_params(),
            3 => selftest::three_write_params(),
            _ => return Err(format!("demo blocks exist for t = 2 or 3, not {t}")),
        };
        let full = FullParams::new(params, 1).map_err(|e| e.to_string())?;
        let session = Session::new(full).map_err(|e| e.to_string())?;
        Ok(BlockDemo { session })
    }

    fn write_hex(&mut self, hex: &str) -> Result<u64, String> {
        let bits = full_codec::bits_from_hex(hex).map_err(|e| e.to_string())?;
        let before = self.session.device().cells_programmed();
        let round = self.session.round() + 1;
        self.session.write_round(round, &bits).map_err(|e| e.to_string())?;
        Ok(self.session.device().cells_programmed() - before)
    }

    fn read_hex(&self) -> Result<String, String> {
        let bits = self.session.read_round(self.session.round()).map_err(|e| e.to_string())?;
        Ok(full_codec::bits_to_hex(&bits))
    }
}

#[wasm_bindgen]
impl BlockDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(t: u32) -> Result<BlockDemo, JsError> {
        BlockDemo::build(t).map_err(|e| JsError::new(&e))
    }

    pub fn t(&self) -> u32 {
        self.session.params().block().t()
    }

    /// Rounds written so far.
    pub fn round(&self) -> u32 {
        self.session.round()
    }

    /// Message bits the given round carries.
    pub fn capacity(&self, round: u32) -> u32 {
        self.session.params().round_capacity(round) as u32
    }

    /// Writes the next round; returns how many cells were newly programmed.
    pub fn write(&mut self, hex: &str) -> Result<u32, JsError> {
        self.write_hex(hex).map(|n| n as u32).map_err(|e| JsError::new(&e))
    }

    /// Hex payload of the latest round.
    pub fn read(&self) -> Result<String, JsError> {
        self.read_hex().map_err(|e| JsError::new(&e))
    }

    /// Cell states, one byte per cell.
    pub fn cells(&self) -> Vec<u8> {
        self.session.device().cells().iter().map(|b| *b as u8).collect()
    }

    /// Region of each cell: 0 header, 1 data, 2 hash index.
    pub fn regions(&self) -> Vec<u8> {
        let p = self.session.params().block();
        let mut out = vec![2u8; p.n0() as usize];
        out[..p.t() as usize].fill(0);
        let data = p.data_offset(0) as usize;
        out[data..data + (p.m() * p.n() as u64) as usize].fill(1);
        out
    }
}
