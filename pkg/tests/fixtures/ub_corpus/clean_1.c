int a = 7, b;
int main() {
  b = a / 7;
  printf("%d\n", b);
  return 0;
}
