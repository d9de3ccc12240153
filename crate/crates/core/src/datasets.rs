//! Dataset loading: MNIST IDX files, class-per-directory image folders and
//! split-list files.

use std::path::{Path, PathBuf};

use crate::model_io::Cursor;
use crate::types::Image;
use crate::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images in `[0, 1]` with integer labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledImageSet {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Files that could not be decoded, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.images.first().map(|i| (i.width, i.height))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            detail: format!("header ends before byte {}", at + 4),
        })
}

/// Parses an IDX image file and its label file. Pixels are scaled by 1/255.
pub fn load_idx(images: &Path, labels: &Path) -> Result<LabeledImageSet> {
    let ib = read_file(images)?;
    let lb = read_file(labels)?;
    parse_idx(&ib, images, &lb, labels)
}

pub fn parse_idx(ib: &[u8], images: &Path, lb: &[u8], labels: &Path) -> Result<LabeledImageSet> {
    let magic = be_u32(ib, 0, images)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::BadMagic {
            path: images.to_path_buf(),
            found: magic,
            expected: IMAGE_MAGIC,
        });
    }
    let magic = be_u32(lb, 0, labels)?;
    if magic != LABEL_MAGIC {
        return Err(Error::BadMagic {
            path: labels.to_path_buf(),
            found: magic,
            expected: LABEL_MAGIC,
        });
    }
    let n = be_u32(ib, 4, images)? as usize;
    let rows = be_u32(ib, 8, images)? as usize;
    let cols = be_u32(ib, 12, images)? as usize;
    let nl = be_u32(lb, 4, labels)? as usize;
    if n != nl {
        return Err(Error::CountMismatch {
            images: n,
            labels: nl,
        });
    }
    let plane = rows * cols;
    if ib.len() < 16 + n * plane {
        return Err(Error::Truncated {
            path: images.to_path_buf(),
            detail: format!("{n} images of {rows}x{cols} need {} bytes, file has {}", 16 + n * plane, ib.len()),
        });
    }
    if lb.len() < 8 + n {
        return Err(Error::Truncated {
            path: labels.to_path_buf(),
            detail: format!("{n} labels need {} bytes, file has {}", 8 + n, lb.len()),
        });
    }
    let images = ib[16..16 + n * plane]
        .chunks_exact(plane.max(1))
        .take(n)
        .map(|c| Image {
            width: cols,
            height: rows,
            pixels: c.iter().map(|&p| p as f64 / 255.0).collect(),
        })
        .collect();
    let labels: Vec<usize> = lb[8..8 + n].iter().map(|&l| l as usize).collect();
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    Ok(LabeledImageSet {
        images,
        labels,
        class_names: (0..classes).map(|c| c.to_string()).collect(),
        skipped: Vec::new(),
    })
}

/// Loads `train-images-idx3-ubyte` / `train-labels-idx1-ubyte` (or the
/// `t10k-` pair when `train` is false) from `dir`.
pub fn load_mnist(dir: &Path, train: bool) -> Result<LabeledImageSet> {
    let prefix = if train { "train" } else { "t10k" };
    load_idx(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        &dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Turns raw file bytes into a grayscale image in `[0, 1]`.
pub trait ImageDecoder {
    fn decode(&self, bytes: &[u8]) -> std::result::Result<Image, String>;
}

/// Netpbm decoder for P2, P3, P5 and P6. Color images are converted with
/// luma weights 0.299 / 0.587 / 0.114.
#[derive(Debug, Clone, Copy, Default)]
pub struct PnmDecoder;

impl ImageDecoder for PnmDecoder {
    fn decode(&self, bytes: &[u8]) -> std::result::Result<Image, String> {
        decode_pnm(bytes)
    }
}

fn header_token(bytes: &[u8], pos: &mut usize) -> std::result::Result<usize, String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("expected a number at byte {start}"))
}

pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Image, String> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err("not a PNM file".into());
    }
    let kind = bytes[1];
    let channels = match kind {
        b'2' | b'5' => 1,
        b'3' | b'6' => 3,
        _ => return Err(format!("unsupported PNM type P{}", kind as char)),
    };
    let mut pos = 2;
    let width = header_token(bytes, &mut pos)?;
    let height = header_token(bytes, &mut pos)?;
    let maxval = header_token(bytes, &mut pos)?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!("bad PNM header {width}x{height} max {maxval}"));
    }
    let count = width * height * channels;
    let mut samples = Vec::with_capacity(count);
    if kind == b'2' || kind == b'3' {
        for _ in 0..count {
            samples.push(header_token(bytes, &mut pos)?);
        }
    } else {
        pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let data = bytes
            .get(pos..pos + need)
            .ok_or_else(|| format!("pixel data truncated: need {need} bytes"))?;
        if wide {
            samples.extend(data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize));
        } else {
            samples.extend(data.iter().map(|&b| b as usize));
        }
    }
    let m = maxval as f64;
    let pixels = if channels == 1 {
        samples.iter().map(|&v| (v as f64 / m).min(1.0)).collect()
    } else {
        samples
            .chunks_exact(3)
            .map(|c| {
                let y = 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64;
                (y / m).min(1.0)
            })
            .collect()
    };
    Ok(Image {
        width,
        height,
        pixels,
    })
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Image {
    if img.width == width && img.height == height {
        return img.clone();
    }
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let mut out = Image::filled(width, height, 0.0);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).max(0.0);
        let y0 = (fy.floor() as usize).min(img.height - 1);
        let y1 = (y0 + 1).min(img.height - 1);
        let ay = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).max(0.0);
            let x0 = (fx.floor() as usize).min(img.width - 1);
            let x1 = (x0 + 1).min(img.width - 1);
            let ax = fx - x0 as f64;
            let top = img.get(y0, x0) * (1.0 - ax) + img.get(y0, x1) * ax;
            let bottom = img.get(y1, x0) * (1.0 - ax) + img.get(y1, x1) * ax;
            out.set(y, x, top * (1.0 - ay) + bottom * ay);
        }
    }
    out
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    v.sort();
    Ok(v)
}

fn load_one(
    path: &Path,
    size: (usize, usize),
    decoder: &dyn ImageDecoder,
) -> std::result::Result<Image, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let img = decoder.decode(&bytes)?;
    Ok(resize_bilinear(&img, size.0, size.1))
}

/// Loads `root/<class>/<file>` with classes labelled in sorted name order
/// and files read in sorted order. Undecodable files are recorded in
/// `skipped`; a class left with no image is an error.
pub fn load_image_dir(
    root: &Path,
    size: (usize, usize),
    decoder: &dyn ImageDecoder,
) -> Result<LabeledImageSet> {
    let classes: Vec<PathBuf> = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    if classes.is_empty() {
        return Err(Error::Image {
            path: root.to_path_buf(),
            reason: "no class subdirectories".into(),
        });
    }
    let mut set = LabeledImageSet::default();
    for (label, dir) in classes.iter().enumerate() {
        let before = set.len();
        for file in sorted_entries(dir)?.into_iter().filter(|p| p.is_file()) {
            match load_one(&file, size, decoder) {
                Ok(img) => {
                    set.images.push(img);
                    set.labels.push(label);
                }
                Err(reason) => set.skipped.push((file, reason)),
            }
        }
        if set.len() == before {
            return Err(Error::Image {
                path: dir.clone(),
                reason: "class has no readable images".into(),
            });
        }
        set.class_names
            .push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    Ok(set)
}

/// Reads a split list (`relative/path label` per line, `#` comments) and
/// loads the listed images relative to `root`.
pub fn load_split(
    root: &Path,
    list: &Path,
    size: (usize, usize),
    decoder: &dyn ImageDecoder,
) -> Result<LabeledImageSet> {
    let text = std::fs::read_to_string(list)
        .map_err(|e| Error::io(format!("reading {}", list.display()), e))?;
    let mut set = LabeledImageSet::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (path, label) = line
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| Error::Config {
                line: i + 1,
                message: "expected `<path> <label>`".into(),
            })?;
        let label: usize = label.parse().map_err(|_| Error::Config {
            line: i + 1,
            message: format!("bad label `{label}`"),
        })?;
        let file = root.join(path.trim());
        match load_one(&file, size, decoder) {
            Ok(img) => {
                set.images.push(img);
                set.labels.push(label);
            }
            Err(reason) => set.skipped.push((file, reason)),
        }
    }
    let classes = set.labels.iter().copied().max().map_or(0, |m| m + 1);
    set.class_names = (0..classes).map(|c| c.to_string()).collect();
    Ok(set)
}

/// Writes a split list for `entries` of `(relative path, label)`.
pub fn write_split(list: &Path, entries: &[(String, usize)]) -> Result<()> {
    let mut s = String::new();
    for (p, l) in entries {
        s.push_str(&format!("{p} {l}\n"));
    }
    std::fs::write(list, s).map_err(|e| Error::io(format!("writing {}", list.display()), e))
}

/// Raw bytes reader used by callers that already hold an IDX file in memory.
pub fn idx_dims(bytes: &[u8]) -> Result<Vec<u32>> {
    let mut c = Cursor::new(bytes);
    let head = c.take(4)?;
    let ndims = head[3] as usize;
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(u32::from_be_bytes(c.take(4)?.try_into().unwrap()));
    }
    Ok(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(n: u32, rows: u32, cols: u32, px: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IMAGE_MAGIC, n, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(px);
        b
    }

    fn idx_labels(magic: u32, l: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&magic.to_be_bytes());
        b.extend_from_slice(&(l.len() as u32).to_be_bytes());
        b.extend_from_slice(l);
        b
    }

    fn p(s: &str) -> &Path {
        Path::new(s)
    }

    #[test]
    fn crafted_idx_pair() {
        let mut px = vec![0u8; 18];
        px[4] = 255;
        px[9] = 51;
        let set = parse_idx(&idx_images(2, 3, 3, &px), p("i"), &idx_labels(LABEL_MAGIC, &[7, 2]), p("l"))
            .unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.labels, vec![7, 2]);
        assert_eq!(set.images[0].get(1, 1), 1.0);
        assert_eq!(set.images[0].get(0, 0), 0.0);
        assert_eq!(set.images[1].get(0, 0), 0.2);
        assert_eq!(idx_dims(&idx_images(2, 3, 3, &px)).unwrap(), vec![2, 3, 3]);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let imgs = idx_images(2, 3, 3, &[0; 18]);
        let e = parse_idx(&imgs, p("i"), &idx_labels(IMAGE_MAGIC, &[1, 2]), p("l")).unwrap_err();
        assert!(matches!(e, Error::BadMagic { found: IMAGE_MAGIC, .. }));
        assert!(e.to_string().contains("magic"));
        let e = parse_idx(&imgs[..30], p("i"), &idx_labels(LABEL_MAGIC, &[1, 2]), p("l")).unwrap_err();
        assert!(matches!(e, Error::Truncated { .. }));
        let e = parse_idx(&imgs, p("i"), &idx_labels(LABEL_MAGIC, &[1, 2, 3]), p("l")).unwrap_err();
        assert!(matches!(e, Error::CountMismatch { images: 2, labels: 3 }));
        let e = parse_idx(&imgs[..6], p("i"), &idx_labels(LABEL_MAGIC, &[1]), p("l")).unwrap_err();
        assert!(matches!(e, Error::Truncated { .. }));
    }

    #[test]
    fn pnm_variants_decode() {
        let p2 = b"P2\n# c\n2 1\n4\n0 4\n";
        assert_eq!(decode_pnm(p2).unwrap().pixels, vec![0.0, 1.0]);
        let mut p5 = b"P5 2 1 255\n".to_vec();
        p5.extend_from_slice(&[255, 0]);
        assert_eq!(decode_pnm(&p5).unwrap().pixels, vec![1.0, 0.0]);
        let mut p6 = b"P6\n1 1\n255\n".to_vec();
        p6.extend_from_slice(&[255, 0, 0]);
        assert!((decode_pnm(&p6).unwrap().pixels[0] - 0.299).abs() < 1e-12);
        let p3 = b"P3 1 1 255 255 255 255";
        assert!((decode_pnm(p3).unwrap().pixels[0] - 1.0).abs() < 1e-12);
        assert!(decode_pnm(b"P5 2 2 255\n\x00").is_err());
        assert!(decode_pnm(b"GIF89a").is_err());
    }

    #[test]
    fn identity_resize_passes_through() {
        let img = Image::new(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(resize_bilinear(&img, 3, 2), img);
    }

    #[test]
    fn halving_matches_pixel_loop() {
        let (w, h) = (500, 320);
        let img = Image::new(
            w,
            h,
            (0..w * h).map(|i| ((i * 7919) % 256) as f64 / 255.0).collect(),
        )
        .unwrap();
        let out = resize_bilinear(&img, 250, 160);
        // Exact 2x: every output center sits midway between a 2x2 block.
        for y in 0..160 {
            for x in 0..250 {
                let mut s = 0.0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        s += img.get(2 * y + dy, 2 * x + dx);
                    }
                }
                assert!((out.get(y, x) - s / 4.0).abs() < 1e-12);
            }
        }
    }

    fn write_pgm(path: &Path, v: u8) {
        let mut b = b"P5 2 2 255\n".to_vec();
        b.extend_from_slice(&[v; 4]);
        std::fs::write(path, b).unwrap();
    }

    #[test]
    fn class_directories_and_split_lists() {
        let root = std::env::temp_dir().join(format!("snn-ds-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&root);
        for c in ["motorbikes", "faces"] {
            std::fs::create_dir_all(root.join(c)).unwrap();
        }
        write_pgm(&root.join("faces/a.pgm"), 255);
        write_pgm(&root.join("motorbikes/b.pgm"), 0);
        std::fs::write(root.join("motorbikes/broken.pgm"), b"P5 9").unwrap();
        let set = load_image_dir(&root, (2, 2), &PnmDecoder).unwrap();
        assert_eq!(set.class_names, vec!["faces", "motorbikes"]);
        assert_eq!(set.labels, vec![0, 1]);
        assert_eq!(set.images[0].pixels, vec![1.0; 4]);
        assert_eq!(set.skipped.len(), 1);

        let list = root.join("split.txt");
        write_split(&list, &[("motorbikes/b.pgm".into(), 1), ("faces/a.pgm".into(), 0)]).unwrap();
        let s = load_split(&root, &list, (4, 4), &PnmDecoder).unwrap();
        assert_eq!(s.labels, vec![1, 0]);
        assert_eq!(s.dimensions(), Some((4, 4)));

        std::fs::create_dir_all(root.join("zz_empty")).unwrap();
        assert!(load_image_dir(&root, (2, 2), &PnmDecoder).is_err());
        std::fs::remove_dir_all(&root).ok();
    }

    #[test]
    fn real_mnist_when_available() {
        let dir = std::env::var("SNN_MNIST_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|_| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
        if !dir.join("t10k-images-idx3-ubyte").exists() {
            eprintln!("MNIST not found in {}, skipping", dir.display());
            return;
        }
        let test = load_mnist(&dir, false).unwrap();
        assert_eq!(test.len(), 10_000);
        assert_eq!(test.dimensions(), Some((28, 28)));
        assert!(test.images.iter().all(|i| i.pixels.iter().all(|v| (0.0..=1.0).contains(v))));
        let train = load_mnist(&dir, true).unwrap();
        assert_eq!(train.len(), 60_000);
    }
}
