fn main() {
    // LAPACK routines are declared through lapack-sys, which does not link a
    // provider itself; use the system libraries.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
