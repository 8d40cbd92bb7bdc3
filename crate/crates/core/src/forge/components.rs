/// Number of face-connected components (4-neighbourhood in 2D, 6 in 3D) of a
/// boolean support laid out on padded `[depth, rows, cols]` dims.
pub fn count_components(support: &[bool], dims: [usize; 3]) -> usize {
    let [d, h, w] = dims;
    debug_assert_eq!(support.len(), d * h * w);
    let mut seen = vec![false; support.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..support.len() {
        if !support[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(off) = stack.pop() {
            let (z, y, x) = (off / (h * w), (off / w) % h, off % w);
            let mut visit = |o: usize| {
                if support[o] && !seen[o] {
                    seen[o] = true;
                    stack.push(o);
                }
            };
            if x > 0 {
                visit(off - 1);
            }
            if x + 1 < w {
                visit(off + 1);
            }
            if y > 0 {
                visit(off - w);
            }
            if y + 1 < h {
                visit(off + w);
            }
            if z > 0 {
                visit(off - h * w);
            }
            if z + 1 < d {
                visit(off + h * w);
            }
        }
    }
    count
}
