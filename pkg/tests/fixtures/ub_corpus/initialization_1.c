int main() {
  int x;
  int y = x;
  printf("%d\n", y);
  return 0;
}
