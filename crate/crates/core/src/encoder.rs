//! Image pre-processing and latency coding.
//!
//! A grayscale image is convolved with a difference of Gaussians, the
//! response is split into an on channel (positive part) and an off channel
//! (negative part), both channels are scaled jointly by the largest absolute
//! response, and every non-zero value becomes one spike whose latency shrinks
//! as the value grows.

use crate::types::{sort_events, Image, SpikeEvent};
use crate::{Error, Result};

/// Difference-of-Gaussians parameters.
///
/// `center` and `surround` are the *variances* of the two Gaussians, so the
/// defaults (1.0, 4.0) correspond to standard deviations 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DogParams {
    pub size: usize,
    pub center: f64,
    pub surround: f64,
}

impl Default for DogParams {
    fn default() -> Self {
        DogParams {
            size: 7,
            center: 1.0,
            surround: 4.0,
        }
    }
}

impl DogParams {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size % 2 == 0 {
            return Err(Error::param(
                "dog_size",
                format!("must be odd and positive, got {}", self.size),
            ));
        }
        if !(self.center > 0.0 && self.center < self.surround) {
            return Err(Error::param(
                "dog_center",
                format!(
                    "need 0 < center < surround, got center={} surround={}",
                    self.center, self.surround
                ),
            ));
        }
        Ok(())
    }
}

/// Time range `[start, end]` of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingWindow {
    pub start: f64,
    pub end: f64,
}

impl Default for CodingWindow {
    fn default() -> Self {
        CodingWindow {
            start: 0.0,
            end: 1.0,
        }
    }
}

impl CodingWindow {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        let w = CodingWindow { start, end };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.start < self.end) {
            return Err(Error::param(
                "coding_window",
                format!("need T_start < T_end, got [{}, {}]", self.start, self.end),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Normalized `size × size` Gaussian kernel with the given variance,
/// row-major. Entries sum to one.
pub fn gaussian_kernel(size: usize, variance: f64) -> Result<Vec<f64>> {
    if size == 0 || size % 2 == 0 {
        return Err(Error::param(
            "kernel_size",
            format!("must be odd and positive, got {size}"),
        ));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::param(
            "variance",
            format!("must be positive, got {variance}"),
        ));
    }
    let half = (size / 2) as i64;
    let mut k = Vec::with_capacity(size * size);
    for v in -half..=half {
        for u in -half..=half {
            let r2 = (u * u + v * v) as f64;
            k.push((-r2 / (2.0 * variance)).exp());
        }
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|x| *x /= sum);
    Ok(k)
}

/// `G_center − G_surround`, row-major.
pub fn dog_kernel(p: &DogParams) -> Result<Vec<f64>> {
    p.validate()?;
    let c = gaussian_kernel(p.size, p.center)?;
    let s = gaussian_kernel(p.size, p.surround)?;
    Ok(c.iter().zip(&s).map(|(a, b)| a - b).collect())
}

/// Convolves the image with the DoG kernel. Borders are zero-padded so the
/// output has the input's size.
pub fn dog_filter(image: &Image, p: &DogParams) -> Result<Image> {
    if image.pixels.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("image", "contains non-finite values"));
    }
    let kernel = dog_kernel(p)?;
    let k = p.size;
    let half = (k / 2) as isize;
    let (h, w) = (image.height as isize, image.width as isize);
    let mut out = Image::filled(image.width, image.height, 0.0);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for v in -half..=half {
                let sy = y - v;
                if sy < 0 || sy >= h {
                    continue;
                }
                for u in -half..=half {
                    let sx = x - u;
                    if sx < 0 || sx >= w {
                        continue;
                    }
                    let kv = kernel[((v + half) as usize) * k + (u + half) as usize];
                    acc += image.get(sy as usize, sx as usize) * kv;
                }
            }
            out.set(y as usize, x as usize, acc);
        }
    }
    Ok(out)
}

/// Rectifies a DoG response into `(on, off)` channels.
pub fn split_channels(dog: &Image) -> (Image, Image) {
    let on = dog.pixels.iter().map(|&v| v.max(0.0)).collect();
    let off = dog.pixels.iter().map(|&v| (-v).max(0.0)).collect();
    (
        Image {
            width: dog.width,
            height: dog.height,
            pixels: on,
        },
        Image {
            width: dog.width,
            height: dog.height,
            pixels: off,
        },
    )
}

/// Latency code of one value in `[0, 1]`: larger values fire earlier.
/// Zero emits nothing.
pub fn encode_latency(value: f64, w: &CodingWindow) -> Result<Option<f64>> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::param(
            "value",
            format!("latency input must lie in [0, 1], got {value}"),
        ));
    }
    if value == 0.0 {
        return Ok(None);
    }
    Ok(Some(w.start + (1.0 - value) * w.duration()))
}

/// Full input pipeline: DoG, on/off split, per-image max normalization and
/// latency coding. Map 0 is the on channel, map 1 the off channel.
pub fn encode_image(image: &Image, p: &DogParams, w: &CodingWindow) -> Result<Vec<SpikeEvent>> {
    w.validate()?;
    if image
        .pixels
        .iter()
        .any(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
    {
        return Err(Error::param("image", "pixels must lie in [0, 1]"));
    }
    let dog = dog_filter(image, p)?;
    let (on, off) = split_channels(&dog);
    let scale = dog.pixels.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut events = Vec::new();
    if scale == 0.0 {
        return Ok(events);
    }
    for (map, channel) in [on, off].iter().enumerate() {
        for y in 0..channel.height {
            for x in 0..channel.width {
                let v = (channel.get(y, x) / scale).min(1.0);
                if let Some(t) = encode_latency(v, w)? {
                    events.push(SpikeEvent::new(t, 0, map, y, x));
                }
            }
        }
    }
    sort_events(&mut events);
    Ok(events)
}
