#include <cstdio>
int main() { std::puts("sample: placeholder"); return 0; }
