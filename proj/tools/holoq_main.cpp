#include <cstdio>
int main() { std::puts("holoq: placeholder"); return 0; }
