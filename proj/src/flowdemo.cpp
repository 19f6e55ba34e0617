namespace nlsym{}
