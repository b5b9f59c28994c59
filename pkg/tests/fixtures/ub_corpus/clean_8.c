int main() {
  int x;
  x = 4;
  int y = x;
  printf("%d\n", y);
  return 0;
}
