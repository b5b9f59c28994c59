int x = 1;
int main() {
  int y = x >> 32;
  printf("%d\n", y);
  return 0;
}
